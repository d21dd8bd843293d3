v0 = 117
if v0 % 10 <= 6:
  v0 -= 9
  v0 += 7
else:
  v1 = 2
  while v1 > 0:
    v1 -= 1
    v0 -= 6
v0 *= 1
