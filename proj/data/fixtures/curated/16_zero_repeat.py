v0 = 42
v6 = 0
while v6 > 0:
  v6 -= 1
  v0 += 9
