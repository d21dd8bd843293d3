v0 = 5
while v0 > 0:
  v0 -= 1
