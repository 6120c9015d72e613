"""Drawing grids: canonical text, binary PGM, SVG, and PNG through matplotlib."""

from __future__ import annotations

from .grid import GridError, Pattern, PeriodicConfig, Rect, dump_grid

FORMATS = ("text", "pgm", "svg", "png")


def default_palette(alphabet) -> dict:
    """Gray levels spread over the colors, first color darkest."""
    n = len(alphabet)
    if n == 1:
        return {alphabet.name(0): 0}
    return {alphabet.name(i): round(255 * i / (n - 1)) for i in range(n)}


def parse_palette(text: str) -> dict:
    """``"D=0 L=255"`` or ``"D=#202020 L=white"``; integers stay gray levels."""
    out = {}
    for item in text.split():
        name, sep, value = item.partition("=")
        if not sep:
            raise GridError(f"bad palette entry {item!r}")
        out[name] = int(value) if value.isdigit() else value
    return out


def _cells(x):
    """Rows north to south of color names (None for holes) and the drawn rectangle."""
    if isinstance(x, PeriodicConfig):
        rect = Rect(0, 0, x.width, x.height)
        get = x.at
    elif isinstance(x, Pattern):
        rect = x.bbox()
        get = x.get
    else:
        raise TypeError("expected a Pattern or PeriodicConfig")
    rows = []
    for y in range(rect.y + rect.h - 1, rect.y - 1, -1):
        row = []
        for xx in range(rect.x, rect.x + rect.w):
            c = get((xx, y))
            row.append(None if c is None else x.alphabet.name(c))
        rows.append(row)
    return rows, rect


def _lookup(palette: dict, name):
    if name is None:
        return None
    try:
        return palette[name]
    except KeyError:
        raise GridError(f"palette has no entry for color {name!r}") from None


def _gray(value) -> int:
    if isinstance(value, int):
        return max(0, min(255, value))
    from matplotlib.colors import to_rgb

    r, g, b = to_rgb(value)
    return round(255 * (0.299 * r + 0.587 * g + 0.114 * b))


def _css(value) -> str:
    if isinstance(value, int):
        return "#{0:02x}{0:02x}{0:02x}".format(max(0, min(255, value)))
    return str(value)


def render(x, fmt: str = "text", palette: dict | None = None) -> bytes:
    """Serialize a pattern or periodic configuration.

    PGM uses one pixel per cell with rows north to south; holes in a
    pattern become mid-gray.  SVG draws one unit square per cell.
    """
    if fmt == "text":
        return dump_grid(x).encode()
    palette = default_palette(x.alphabet) if palette is None else palette
    rows, rect = _cells(x)
    values = [[_lookup(palette, name) for name in row] for row in rows]
    if fmt == "pgm":
        header = f"P5 {rect.w} {rect.h} 255\n".encode()
        body = bytes(128 if v is None else _gray(v) for row in values for v in row)
        return header + body
    if fmt == "svg":
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{rect.w * 20}" height="{rect.h * 20}" '
            f'viewBox="0 0 {rect.w} {rect.h}" shape-rendering="crispEdges">'
        ]
        for j, row in enumerate(values):
            for i, v in enumerate(row):
                if v is not None:
                    parts.append(f'<rect x="{i}" y="{j}" width="1" height="1" fill="{_css(v)}"/>')
        parts.append("</svg>")
        return ("\n".join(parts) + "\n").encode()
    if fmt == "png":
        return _png(values, rect)
    raise GridError(f"unknown render format {fmt!r}")


def _png(values, rect) -> bytes:
    import io

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import to_rgba

    def rgba(v):
        if v is None:
            return (1.0, 1.0, 1.0, 0.0)
        if isinstance(v, int):
            g = max(0, min(255, v)) / 255
            return (g, g, g, 1.0)
        return to_rgba(v)

    image = [[rgba(v) for v in row] for row in values]
    scale = 0.35
    fig, ax = plt.subplots(figsize=(max(1.0, rect.w * scale), max(1.0, rect.h * scale)))
    ax.imshow(image, interpolation="nearest")
    ax.set_xticks([i - 0.5 for i in range(rect.w + 1)], minor=True)
    ax.set_yticks([j - 0.5 for j in range(rect.h + 1)], minor=True)
    ax.grid(which="minor", color="#888888", linewidth=0.5)
    ax.tick_params(which="both", bottom=False, left=False, labelbottom=False, labelleft=False)
    buf = io.BytesIO()
    fig.savefig(buf, format="png", bbox_inches="tight", dpi=100)
    plt.close(fig)
    return buf.getvalue()
