v0 = 3
v1 = 3
while v1 > 0:
  v1 -= 1
  v2 = 5
  while v2 > 0:
    v2 -= 1
    v0 += 2
    if v0 % 10 >= 7:
      break
  v0 *= 2
