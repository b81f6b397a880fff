PAIR = {'AC': '.*.*', 'AD': '*.*.', 'BC': '****', 'BD': '....'}
THIRD = {'E': '.**.', 'F': '*..*'}
FILL = {0: '....', 1: '****', 2: '.*.*', 3: '*.*.'}
LAST = {'G': [(3, 0), (3, 1)], 'H': [(3, 0), (3, 1), (3, 2), (3, 3), (2, 0), (2, 3)]}


def generate(s):
    rows = [PAIR[s[0] + s[1]], THIRD[s[2]], list(FILL[0]), list(FILL[0])]
    for r, c in LAST[s[3]]:
        rows[r][c] = FILL[1][c]
    return [rows[0], rows[1], ''.join(rows[2]), ''.join(rows[3])]
