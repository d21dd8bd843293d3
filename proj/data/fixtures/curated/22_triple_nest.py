v0 = 100
v1 = 2
while v1 > 0:
  v1 -= 1
  v2 = 2
  while v2 > 0:
    v2 -= 1
    v3 = 2
    while v3 > 0:
      v3 -= 1
      v0 += 5
