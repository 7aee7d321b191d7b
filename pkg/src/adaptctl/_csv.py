"""Full-precision CSV text shared by every exporter."""


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else format(x, ".17g") for x in row))
    return "\n".join(lines) + "\n"
