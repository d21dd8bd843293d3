v0 = 589
if v0 % 10 >= 8:
  v0 *= 4
else:
  if v0 % 10 < 0:
    v0 *= 1
  else:
    if v0 % 10 >= 6:
      if v0 % 10 < 3:
        v0 += 9
