v0 = 159
v7 = 7
while v7 > 0:
  v7 -= 1
  v0 -= 9
if v0 % 10 < 5:
  v0 -= 6
  v0 *= 1
  v0 -= 4
v0 += 7
