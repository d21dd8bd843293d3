v0 = 23
v1 = 6
while v1 > 0:
  v1 -= 1
  if v0 % 10 <= 3:
    v0 += 4
    v0 *= 6
  v0 -= 1
