v0 = 1
v1 = 3
while v1 > 0:
  v1 -= 1
  v2 = 4
  while v2 > 0:
    v2 -= 1
    v0 *= 3
  v0 += 1
