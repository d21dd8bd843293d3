v0 = 456
if v0 % 10 > 5:
  v0 += 1
if v0 % 10 < 8:
  v0 += 2
if v0 % 10 >= 9:
  v0 += 3
if v0 % 10 <= 2:
  v0 += 4
