// Generated: lowest-weight irreducible polynomial per degree. Entry w-1 lists the
// exponents strictly between 0 and w (trinomial or pentanomial; x + 1 for w = 1).
pub(crate) static MODULUS_TERMS: [&[u16]; 256] = [
    &[], // 1
    &[1], // 2
    &[1], // 3
    &[1], // 4
    &[2], // 5
    &[1], // 6
    &[1], // 7
    &[4, 3, 1], // 8
    &[1], // 9
    &[3], // 10
    &[2], // 11
    &[3], // 12
    &[4, 3, 1], // 13
    &[5], // 14
    &[1], // 15
    &[5, 3, 1], // 16
    &[3], // 17
    &[3], // 18
    &[5, 2, 1], // 19
    &[3], // 20
    &[2], // 21
    &[1], // 22
    &[5], // 23
    &[4, 3, 1], // 24
    &[3], // 25
    &[4, 3, 1], // 26
    &[5, 2, 1], // 27
    &[1], // 28
    &[2], // 29
    &[1], // 30
    &[3], // 31
    &[7, 3, 2], // 32
    &[10], // 33
    &[7], // 34
    &[2], // 35
    &[9], // 36
    &[6, 4, 1], // 37
    &[6, 5, 1], // 38
    &[4], // 39
    &[5, 4, 3], // 40
    &[3], // 41
    &[7], // 42
    &[6, 4, 3], // 43
    &[5], // 44
    &[4, 3, 1], // 45
    &[1], // 46
    &[5], // 47
    &[5, 3, 2], // 48
    &[9], // 49
    &[4, 3, 2], // 50
    &[6, 3, 1], // 51
    &[3], // 52
    &[6, 2, 1], // 53
    &[9], // 54
    &[7], // 55
    &[7, 4, 2], // 56
    &[4], // 57
    &[19], // 58
    &[7, 4, 2], // 59
    &[1], // 60
    &[5, 2, 1], // 61
    &[29], // 62
    &[1], // 63
    &[4, 3, 1], // 64
    &[18], // 65
    &[3], // 66
    &[5, 2, 1], // 67
    &[9], // 68
    &[6, 5, 2], // 69
    &[5, 3, 1], // 70
    &[6], // 71
    &[10, 9, 3], // 72
    &[25], // 73
    &[35], // 74
    &[6, 3, 1], // 75
    &[21], // 76
    &[6, 5, 2], // 77
    &[6, 5, 3], // 78
    &[9], // 79
    &[9, 4, 2], // 80
    &[4], // 81
    &[8, 3, 1], // 82
    &[7, 4, 2], // 83
    &[5], // 84
    &[8, 2, 1], // 85
    &[21], // 86
    &[13], // 87
    &[7, 6, 2], // 88
    &[38], // 89
    &[27], // 90
    &[8, 5, 1], // 91
    &[21], // 92
    &[2], // 93
    &[21], // 94
    &[11], // 95
    &[10, 9, 6], // 96
    &[6], // 97
    &[11], // 98
    &[6, 3, 1], // 99
    &[15], // 100
    &[7, 6, 1], // 101
    &[29], // 102
    &[9], // 103
    &[4, 3, 1], // 104
    &[4], // 105
    &[15], // 106
    &[9, 7, 4], // 107
    &[17], // 108
    &[5, 4, 2], // 109
    &[33], // 110
    &[10], // 111
    &[5, 4, 3], // 112
    &[9], // 113
    &[5, 3, 2], // 114
    &[8, 7, 5], // 115
    &[4, 2, 1], // 116
    &[5, 2, 1], // 117
    &[33], // 118
    &[8], // 119
    &[4, 3, 1], // 120
    &[18], // 121
    &[6, 2, 1], // 122
    &[2], // 123
    &[19], // 124
    &[7, 6, 5], // 125
    &[21], // 126
    &[1], // 127
    &[7, 2, 1], // 128
    &[5], // 129
    &[3], // 130
    &[8, 3, 2], // 131
    &[17], // 132
    &[9, 8, 2], // 133
    &[57], // 134
    &[11], // 135
    &[5, 3, 2], // 136
    &[21], // 137
    &[8, 7, 1], // 138
    &[8, 5, 3], // 139
    &[15], // 140
    &[10, 4, 1], // 141
    &[21], // 142
    &[5, 3, 2], // 143
    &[7, 4, 2], // 144
    &[52], // 145
    &[71], // 146
    &[14], // 147
    &[27], // 148
    &[10, 9, 7], // 149
    &[53], // 150
    &[3], // 151
    &[6, 3, 2], // 152
    &[1], // 153
    &[15], // 154
    &[62], // 155
    &[9], // 156
    &[6, 5, 2], // 157
    &[8, 6, 5], // 158
    &[31], // 159
    &[5, 3, 2], // 160
    &[18], // 161
    &[27], // 162
    &[7, 6, 3], // 163
    &[10, 8, 7], // 164
    &[9, 8, 3], // 165
    &[37], // 166
    &[6], // 167
    &[15, 3, 2], // 168
    &[34], // 169
    &[11], // 170
    &[6, 5, 2], // 171
    &[1], // 172
    &[8, 5, 2], // 173
    &[13], // 174
    &[6], // 175
    &[11, 3, 2], // 176
    &[8], // 177
    &[31], // 178
    &[4, 2, 1], // 179
    &[3], // 180
    &[7, 6, 1], // 181
    &[81], // 182
    &[56], // 183
    &[9, 8, 7], // 184
    &[24], // 185
    &[11], // 186
    &[7, 6, 5], // 187
    &[6, 5, 2], // 188
    &[6, 5, 2], // 189
    &[8, 7, 6], // 190
    &[9], // 191
    &[7, 2, 1], // 192
    &[15], // 193
    &[87], // 194
    &[8, 3, 2], // 195
    &[3], // 196
    &[9, 4, 2], // 197
    &[9], // 198
    &[34], // 199
    &[5, 3, 2], // 200
    &[14], // 201
    &[55], // 202
    &[8, 7, 1], // 203
    &[27], // 204
    &[9, 5, 2], // 205
    &[10, 9, 5], // 206
    &[43], // 207
    &[9, 3, 1], // 208
    &[6], // 209
    &[7], // 210
    &[11, 10, 8], // 211
    &[105], // 212
    &[6, 5, 2], // 213
    &[73], // 214
    &[23], // 215
    &[7, 3, 1], // 216
    &[45], // 217
    &[11], // 218
    &[8, 4, 1], // 219
    &[7], // 220
    &[8, 6, 2], // 221
    &[5, 4, 2], // 222
    &[33], // 223
    &[9, 8, 3], // 224
    &[32], // 225
    &[10, 7, 3], // 226
    &[10, 9, 4], // 227
    &[113], // 228
    &[10, 4, 1], // 229
    &[8, 7, 6], // 230
    &[26], // 231
    &[9, 4, 2], // 232
    &[74], // 233
    &[31], // 234
    &[9, 6, 1], // 235
    &[5], // 236
    &[7, 4, 1], // 237
    &[73], // 238
    &[36], // 239
    &[8, 5, 3], // 240
    &[70], // 241
    &[95], // 242
    &[8, 5, 1], // 243
    &[111], // 244
    &[6, 4, 1], // 245
    &[11, 2, 1], // 246
    &[82], // 247
    &[15, 14, 10], // 248
    &[35], // 249
    &[103], // 250
    &[7, 4, 2], // 251
    &[15], // 252
    &[46], // 253
    &[7, 2, 1], // 254
    &[52], // 255
    &[10, 5, 2], // 256
];
