v0 = 849
if v0 % 10 < 5:
  v0 -= 3
else:
  v0 -= 4
  v0 += 2
  v0 *= 9
if v0 % 10 >= 4:
  if v0 % 10 < 6:
    v0 *= 8
