def chunks(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i:i + size]


def flatten(rows):
    out = []
    for row in rows:
        out.extend(row)
    return out
