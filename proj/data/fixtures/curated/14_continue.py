v0 = 10
v3 = 5
while v3 > 0:
  v3 -= 1
  v0 += 1
  if v0 % 10 > 2:
    continue
  v0 *= 2
