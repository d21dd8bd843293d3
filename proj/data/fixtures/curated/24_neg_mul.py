v0 = 1
v0 -= 5
v0 *= 7
if v0 % 10 <= 2:
  v0 *= 2
else:
  v0 -= 1
