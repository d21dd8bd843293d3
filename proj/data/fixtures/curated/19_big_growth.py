v0 = 9
v1 = 9
while v1 > 0:
  v1 -= 1
  v2 = 9
  while v2 > 0:
    v2 -= 1
    v0 *= 9
