"""Read .xlsx workbooks into :class:`~gridcompress.grid.Sheet` objects.

Only the parts that matter for encoding are read: cell values, shared
strings, number formats, fills, bold fonts, borders and merge ranges.
Numeric cells with a number format are rendered through a small formatter
so the encoded text resembles what a spreadsheet application displays.
"""

from __future__ import annotations

import io
import math
import posixpath
import re
import zipfile
from datetime import datetime, timedelta
from decimal import ROUND_HALF_UP, Decimal
from xml.etree import ElementTree as ET

from .errors import A1ParseError, IngestionError
from .grid import Cell, StyleAttrs, PLAIN, Sheet, build_sheet, parse_a1, parse_range

NS = {
    "m": "http://schemas.openxmlformats.org/spreadsheetml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "pr": "http://schemas.openxmlformats.org/package/2006/relationships",
}
_R_ID = "{%s}id" % NS["r"]

BUILTIN_FORMATS = {
    0: "General",
    1: "0",
    2: "0.00",
    3: "#,##0",
    4: "#,##0.00",
    5: '"$"#,##0_);("$"#,##0)',
    6: '"$"#,##0_);[Red]("$"#,##0)',
    7: '"$"#,##0.00_);("$"#,##0.00)',
    8: '"$"#,##0.00_);[Red]("$"#,##0.00)',
    9: "0%",
    10: "0.00%",
    11: "0.00E+00",
    12: "# ?/?",
    13: "# ??/??",
    14: "mm-dd-yy",
    15: "d-mmm-yy",
    16: "d-mmm",
    17: "mmm-yy",
    18: "h:mm AM/PM",
    19: "h:mm:ss AM/PM",
    20: "h:mm",
    21: "h:mm:ss",
    22: "m/d/yy h:mm",
    37: "#,##0 ;(#,##0)",
    38: "#,##0 ;[Red](#,##0)",
    39: "#,##0.00;(#,##0.00)",
    40: "#,##0.00;[Red](#,##0.00)",
    45: "mm:ss",
    46: "[h]:mm:ss",
    47: "mmss.0",
    48: "##0.0E+0",
    49: "@",
}

_MONTHS = ["January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December"]


def is_general(nfs: str | None) -> bool:
    return nfs is None or nfs.strip().lower() in ("", "general", "@")


# ---------------------------------------------------------------------------
# number-format rendering

def _strip_section(section: str) -> tuple[str, str, str]:
    """Split a format section into (prefix literal, numeric core, suffix literal).

    Colour/locale tags, padding (``_x``) and fill (``*x``) directives are dropped;
    quoted and escaped literals are kept.
    """
    section = re.sub(r"\[(?:Red|Black|Blue|Green|White|Yellow|Cyan|Magenta|Color\d+)\]", "", section,
                     flags=re.I)
    section = re.sub(r"\[\$([^\]-]*)(?:-[0-9A-Fa-f]+)?\]", lambda m: '"' + m.group(1) + '"', section)
    out = []
    i = 0
    while i < len(section):
        ch = section[i]
        if ch == '"':
            j = section.find('"', i + 1)
            j = len(section) if j < 0 else j
            out.append(("lit", section[i + 1:j]))
            i = j + 1
        elif ch == "\\" and i + 1 < len(section):
            out.append(("lit", section[i + 1]))
            i += 2
        elif ch in "_*" and i + 1 < len(section):
            i += 2
        elif ch in "0#?.,%Ee+-" or ch.isdigit():
            out.append(("num", ch))
            i += 1
        else:
            out.append(("lit", ch))
            i += 1
    # numeric core is the span from the first to the last digit placeholder
    idx = [k for k, (kind, ch) in enumerate(out) if kind == "num" and ch in "0#?"]
    if not idx:
        return "".join(t for _, t in out), "", ""
    a, b = idx[0], idx[-1]
    while b + 1 < len(out) and out[b + 1][0] == "num" and out[b + 1][1] in "%":
        b += 1
    prefix = "".join(t for _, t in out[:a])
    core = "".join(t for _, t in out[a:b + 1])
    suffix = "".join(t for _, t in out[b + 1:])
    return prefix, core, suffix


def _format_plain_number(x: float, core: str) -> str:
    percent = core.count("%")
    core_np = core.replace("%", "")
    x = x * (100 ** percent)
    sci = re.search(r"[Ee][+-]", core_np)
    if sci:
        mant = core_np[:sci.start()]
        decimals = len(mant.split(".", 1)[1]) if "." in mant else 0
        exp_digits = len(re.sub(r"[^0#?]", "", core_np[sci.end():])) or 2
        text = f"{x:.{decimals}E}"
        m, e = text.split("E")
        sign = "-" if int(e) < 0 else "+"
        return f"{m}E{sign}{abs(int(e)):0{exp_digits}d}" + "%" * percent
    int_part, _, frac_part = core_np.partition(".")
    decimals = len(re.sub(r"[^0#?]", "", frac_part))
    grouping = "," in int_part
    # spreadsheet display rounds half away from zero
    q = Decimal(repr(x)).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP)
    text = f"{q:,.{decimals}f}" if grouping else f"{q:.{decimals}f}"
    if frac_part and set(re.sub(r"[^0#?]", "", frac_part)) == {"#"}:
        text = text.rstrip("0").rstrip(".")
    return text + "%" * percent


_DATE_TOKEN_RE = re.compile(
    r"\[h+\]|\[m+\]|\[s+\]|yyyy|yy|mmmmm|mmmm|mmm|mm|m|dddd|ddd|dd|d|hh|h|ss|s|AM/PM|am/pm|A/P|a/p|\.0+|\"[^\"]*\"|\\.|.",
    re.I,
)


def is_date_format(nfs: str | None) -> bool:
    if is_general(nfs):
        return False
    body = re.sub(r'"[^"]*"|\\.|\[[^\]]*\]', "", nfs.split(";")[0])
    return bool(re.search(r"[dDyY]|[hH]|[sS]", body)) or bool(re.search(r"[mM]", body) and not re.search(r"[0#?]", body))


def excel_serial_to_datetime(serial: float, date1904: bool = False) -> datetime:
    if date1904:
        base = datetime(1904, 1, 1)
    else:
        # 1900 system with the Lotus leap-year bug: serial 60 is the fictitious 1900-02-29
        base = datetime(1899, 12, 31) if serial < 60 else datetime(1899, 12, 30)
    return base + timedelta(days=serial)


_CODES = {"yyyy", "yy", "m", "mm", "mmm", "mmmm", "mmmmm", "d", "dd", "ddd", "dddd",
          "h", "hh", "s", "ss", "[h]", "[hh]", "[m]", "[mm]", "[s]", "[ss]"}


def _format_datetime(dt: datetime, fmt: str, elapsed: int = 0) -> str:
    """Render ``dt`` under a date/time format; ``elapsed`` seconds feed ``[h]``, ``[mm]``, ``[ss]``."""
    tokens = _DATE_TOKEN_RE.findall(fmt)
    codes = [k for k, t in enumerate(tokens) if t.lower() in _CODES]
    has_ampm = any(t.upper() in ("AM/PM", "A/P") for t in tokens)

    def is_minute(k: int) -> bool:
        pos = codes.index(k)
        prev = tokens[codes[pos - 1]].lower() if pos > 0 else ""
        nxt = tokens[codes[pos + 1]].lower() if pos + 1 < len(codes) else ""
        return prev in ("h", "hh", "[h]", "[hh]") or nxt in ("s", "ss")

    out = []
    for k, tok in enumerate(tokens):
        low = tok.lower()
        if low.startswith("["):
            unit = {"h": 3600, "m": 60, "s": 1}[low[1]]
            out.append(f"{elapsed // unit:0{len(low) - 2}d}")
        elif low == "yyyy":
            out.append(f"{dt.year:04d}")
        elif low == "yy":
            out.append(f"{dt.year % 100:02d}")
        elif low in ("m", "mm"):
            n = dt.minute if is_minute(k) else dt.month
            out.append(f"{n:02d}" if low == "mm" else str(n))
        elif low in ("mmm", "mmmm", "mmmmm"):
            month = _MONTHS[dt.month - 1]
            out.append({3: month[:3], 4: month, 5: month[0]}[len(low)])
        elif low == "dddd":
            out.append(dt.strftime("%A"))
        elif low == "ddd":
            out.append(dt.strftime("%a"))
        elif low in ("d", "dd"):
            out.append(f"{dt.day:02d}" if low == "dd" else str(dt.day))
        elif low in ("h", "hh"):
            hour = dt.hour % 12 or 12 if has_ampm else dt.hour
            out.append(f"{hour:02d}" if low == "hh" else str(hour))
        elif low in ("s", "ss"):
            out.append(f"{dt.second:02d}" if low == "ss" else str(dt.second))
        elif low in ("am/pm", "a/p"):
            pm = dt.hour >= 12
            out.append(("PM" if pm else "AM") if low == "am/pm" else ("P" if pm else "A"))
        elif tok.startswith("."):
            out.append(f"{dt.microsecond / 1e6:.{len(tok) - 1}f}"[1:])
        elif tok.startswith('"'):
            out.append(tok[1:-1])
        elif tok.startswith("\\"):
            out.append(tok[1:])
        else:
            out.append(tok)
    return "".join(out)


def format_value(raw: str, nfs: str | None, date1904: bool = False) -> str:
    """Display text for a stored numeric value under a number format.

    Covers the shapes needed by the type recognizer: integers, decimals with
    or without grouping, percentages, scientific notation, currency literals,
    dates and times.  Anything else falls back to the stored text.
    """
    if is_general(nfs):
        return raw
    try:
        x = float(raw)
    except ValueError:
        return raw
    if math.isnan(x) or math.isinf(x):
        return raw
    sections = nfs.split(";")
    section = sections[0]
    if x < 0 and len(sections) > 1 and sections[1].strip():
        section = sections[1]
        x = -x
    elif x == 0 and len(sections) > 2 and sections[2].strip():
        section = sections[2]
    if is_date_format(section):
        body = re.sub(r"\[(?![hms]+\])[^\]]*\]", "", section, flags=re.I)
        if re.search(r"\[[hms]+\]", section, re.I):
            total = round(x * 86400)
            h, rem = divmod(total, 3600)
            mi, sec = divmod(rem, 60)
            return _format_datetime(datetime(2000, 1, 1, h % 24, mi, sec), body, total)
        try:
            dt = excel_serial_to_datetime(x, date1904)
        except OverflowError:
            return raw
        dt = dt.replace(microsecond=0) + timedelta(seconds=round(dt.microsecond / 1e6))
        return _format_datetime(dt, body)
    prefix, core, suffix = _strip_section(section)
    if not core:
        return raw
    if "/" in core or "?" in core and "/" in section:
        return raw
    sign = "-" if x < 0 and len(sections) == 1 else ""
    body = _format_plain_number(abs(x) if sign else x, core)
    return f"{sign}{prefix}{body}{suffix}".strip()


# ---------------------------------------------------------------------------
# package reading

def _read_xml(z: zipfile.ZipFile, name: str) -> ET.Element | None:
    try:
        data = z.read(name)
    except KeyError:
        return None
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise IngestionError(f"{name}: malformed XML ({exc})") from None


def _rels(z: zipfile.ZipFile, part: str) -> dict[str, str]:
    folder, fname = posixpath.split(part)
    root = _read_xml(z, posixpath.join(folder, "_rels", fname + ".rels"))
    out = {}
    if root is None:
        return out
    for rel in root.findall("pr:Relationship", NS):
        target = rel.get("Target", "")
        if target.startswith("/"):
            target = target[1:]
        else:
            target = posixpath.normpath(posixpath.join(folder, target))
        out[rel.get("Id")] = target
    return out


def _text_of(si: ET.Element) -> str:
    t = si.find("m:t", NS)
    if t is not None:
        return t.text or ""
    # rich text runs; phonetic runs (rPh) are not display text
    return "".join((r.text or "") for r in si.findall("m:r/m:t", NS))


def _shared_strings(z: zipfile.ZipFile, path: str | None) -> list[str]:
    if path is None:
        return []
    root = _read_xml(z, path)
    if root is None:
        return []
    return [_text_of(si) for si in root.findall("m:si", NS)]


def _color_token(el: ET.Element | None) -> str | None:
    if el is None:
        return None
    if el.get("rgb"):
        return el.get("rgb").upper()
    if el.get("theme") is not None:
        tint = el.get("tint")
        return f"theme:{el.get('theme')}" + (f":{float(tint):.2f}" if tint else "")
    if el.get("indexed") is not None:
        return f"indexed:{el.get('indexed')}"
    return None


class _Styles:
    def __init__(self, root: ET.Element | None):
        self.numfmts = dict(BUILTIN_FORMATS)
        self.xfs: list[tuple[int, int, int, int]] = []
        fonts, fills, borders = [], [], []
        if root is not None:
            for nf in root.findall("m:numFmts/m:numFmt", NS):
                self.numfmts[int(nf.get("numFmtId"))] = nf.get("formatCode", "")
            for font in root.findall("m:fonts/m:font", NS):
                b = font.find("m:b", NS)
                fonts.append(b is not None and b.get("val", "1") not in ("0", "false"))
            for fill in root.findall("m:fills/m:fill", NS):
                pf = fill.find("m:patternFill", NS)
                color = None
                if pf is not None and pf.get("patternType", "none") not in ("none",):
                    color = _color_token(pf.find("m:fgColor", NS)) or _color_token(pf.find("m:bgColor", NS)) or "auto"
                elif fill.find("m:gradientFill", NS) is not None:
                    color = "gradient"
                fills.append(color)
            for border in root.findall("m:borders/m:border", NS):
                sides = set()
                for side in ("top", "bottom", "left", "right"):
                    el = border.find(f"m:{side}", NS)
                    if el is None and side in ("left", "right"):
                        el = border.find("m:" + ("start" if side == "left" else "end"), NS)
                    if el is not None and el.get("style") not in (None, "none"):
                        sides.add(side)
                borders.append(frozenset(sides))
            for xf in root.findall("m:cellXfs/m:xf", NS):
                self.xfs.append((int(xf.get("numFmtId", 0)), int(xf.get("fontId", 0)),
                                 int(xf.get("fillId", 0)), int(xf.get("borderId", 0))))
        self.fonts, self.fills, self.borders = fonts, fills, borders

    def resolve(self, s: int) -> tuple[str | None, StyleAttrs]:
        if s >= len(self.xfs):
            return None, PLAIN
        num_id, font_id, fill_id, border_id = self.xfs[s]
        nfs = self.numfmts.get(num_id)
        bold = self.fonts[font_id] if font_id < len(self.fonts) else False
        fill = self.fills[fill_id] if fill_id < len(self.fills) else None
        sides = self.borders[border_id] if border_id < len(self.borders) else frozenset()
        style = StyleAttrs(fill, bold, sides)
        return (None if is_general(nfs) else nfs), (PLAIN if style.is_plain else style)


def _read_worksheet(root: ET.Element, name: str, strings: list[str], styles: _Styles,
                    date1904: bool) -> Sheet:
    cells: dict[tuple[int, int], Cell] = {}
    for row_idx, row in enumerate(root.iterfind("m:sheetData/m:row", NS)):
        r_attr = row.get("r")
        cur_row = int(r_attr) - 1 if r_attr else row_idx
        next_col = 0
        for c in row.iterfind("m:c", NS):
            ref = c.get("r")
            try:
                addr = parse_a1(ref) if ref else None
            except A1ParseError as exc:
                raise IngestionError(f"{name}: {exc}") from None
            r, col = (addr.row, addr.col) if addr else (cur_row, next_col)
            next_col = col + 1
            t = c.get("t", "n")
            v = c.find("m:v", NS)
            raw = v.text if v is not None and v.text is not None else ""
            nfs, style = styles.resolve(int(c.get("s", 0)))
            if t == "s":
                try:
                    value = strings[int(raw)] if raw != "" else ""
                except (ValueError, IndexError):
                    raise IngestionError(f"{name}!{ref}: bad shared-string index {raw!r}") from None
            elif t == "inlineStr":
                is_ = c.find("m:is", NS)
                value = _text_of(is_) if is_ is not None else ""
            elif t == "b":
                value = "TRUE" if raw.strip() in ("1", "true") else "FALSE"
            elif t in ("str", "e"):
                value = raw
            else:
                value = format_value(raw, nfs, date1904) if raw != "" else ""
            cells[(r, col)] = Cell(value, nfs, style)
    for mc in root.iterfind("m:mergeCells/m:mergeCell", NS):
        try:
            rng = parse_range(mc.get("ref", ""))
        except A1ParseError as exc:
            raise IngestionError(f"{name}: bad merge range ({exc})") from None
        anchor = cells.get((rng.top, rng.left), Cell())
        cells[(rng.top, rng.left)] = Cell(anchor.value, anchor.nfs, anchor.style, rng)
    return build_sheet(cells, name)


def ingest_xlsx(data: bytes) -> list[Sheet]:
    """One :class:`Sheet` per worksheet, in workbook order."""
    try:
        z = zipfile.ZipFile(io.BytesIO(data))
    except (zipfile.BadZipFile, OSError) as exc:
        raise IngestionError(f"not a zip archive: {exc}") from None
    with z:
        bad = z.testzip()
        if bad is not None:
            raise IngestionError(f"corrupt archive member {bad}")
        root_rels = _rels(z, "")
        wb_path = next((t for t in root_rels.values() if t.endswith("workbook.xml")), "xl/workbook.xml")
        wb = _read_xml(z, wb_path)
        if wb is None:
            raise IngestionError(f"missing workbook part {wb_path}")
        wb_rels = _rels(z, wb_path)
        pr = wb.find("m:workbookPr", NS)
        date1904 = pr is not None and pr.get("date1904", "0") in ("1", "true")
        strings_path = next((t for t in wb_rels.values() if t.endswith("sharedStrings.xml")), None)
        styles_path = next((t for t in wb_rels.values() if t.endswith("styles.xml")), None)
        strings = _shared_strings(z, strings_path)
        styles = _Styles(_read_xml(z, styles_path) if styles_path else None)
        sheets = []
        for sh in wb.findall("m:sheets/m:sheet", NS):
            name = sh.get("name", f"Sheet{len(sheets) + 1}")
            target = wb_rels.get(sh.get(_R_ID))
            if target is None:
                raise IngestionError(f"worksheet {name!r}: no relationship target")
            root = _read_xml(z, target)
            if root is None:
                raise IngestionError(f"worksheet {name!r}: missing part {target}")
            if root.find("m:sheetData", NS) is None:
                # chartsheets and dialog sheets have no grid
                continue
            sheets.append(_read_worksheet(root, name, strings, styles, date1904))
        if not sheets:
            raise IngestionError("workbook has no worksheets")
        return sheets
