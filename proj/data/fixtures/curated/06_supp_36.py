v0 = 36
if v0 % 10 >= 7:
  v0 *= 3
  if v0 % 10 > 3:
    v0 *= 4
    v5 = 3
    while v5 > 0:
      v5 -= 1
      break
v0 *= 2
