v0 = 11
v8 = 4
while v8 > 0:
  v8 -= 1
  if v0 % 10 < 5:
    v0 *= 3
  else:
    v0 -= 5
