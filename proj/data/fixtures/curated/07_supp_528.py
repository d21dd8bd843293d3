v0 = 528
v0 *= 1
v0 += 9
v0 += 3
if v0 % 10 < 8:
  if v0 % 10 < 3:
    if v0 % 10 < 0:
      v0 -= 7
    v0 -= 9
