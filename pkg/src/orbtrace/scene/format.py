"""Text scene format.

A file is a sequence of blocks ``name { ... }`` holding ``key = value ...``
assignments and nested blocks. Whitespace, including newlines, only separates
tokens; ``#`` starts a comment. Numeric keys carry their unit as a suffix
(``_cm``, ``_mm``, ``_deg``, ``_px``). See ``docs/scene-format.md`` for the
grammar and the full key list.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from ..optics import CalciteSpec, DielectricSpec
from ..render.settings import RenderSettings
from .config import (DEFAULT_BANDS, DEFAULT_FOLDS, BandSpec, CameraSpec, FoldSpec, HandSpec,
                     LightRig, OrbSpec, ReliefSpec, SceneConfig, StrokeSpec, cone_directions)


class SceneFormatError(ValueError):
    """Base class; ``line`` and ``column`` are 1-based (0 when unknown)."""

    kind = "error"

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<scene>"):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        return f"{self.source}:{self.line}:{self.column}: {self.kind}: {self.message}"


class SceneSyntaxError(SceneFormatError):
    kind = "syntax error"


class UnknownKeyError(SceneFormatError):
    kind = "unknown key"


class UnitViolationError(SceneFormatError):
    kind = "unit violation"


# --------------------------------------------------------------------------
# tokens and tree

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+) |
    (?P<comment>\#[^\n]*) |
    (?P<punct>[{}=]) |
    (?P<string>"(?:[^"\\\n]|\\.)*") |
    (?P<word>[^\s{}="\#]+)
""", re.VERBOSE)


@dataclass
class Token:
    kind: str  # punct, string, word
    text: str
    line: int
    column: int


def tokenize(text: str, source: str = "<scene>"):
    out = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            what = "unterminated string" if text[pos] == '"' else f"unexpected character {text[pos]!r}"
            raise SceneSyntaxError(what, line, col, source)
        kind = m.lastgroup
        chunk = m.group()
        if kind in ("punct", "word"):
            out.append(Token(kind, chunk, line, col))
        elif kind == "string":
            out.append(Token("string", _unquote(chunk), line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    return out


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


@dataclass
class Entry:
    key: str
    values: list  # of Token
    line: int = 0
    column: int = 0


@dataclass
class Block:
    name: str
    entries: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    line: int = 0
    column: int = 0


def parse_tree(text: str, source: str = "<scene>") -> Block:
    toks = tokenize(text, source)
    root = Block("<root>", line=1, column=1)
    stack = [root]
    i = 0
    while i < len(toks):
        t = toks[i]
        if t.kind == "punct" and t.text == "}":
            if len(stack) == 1:
                raise SceneSyntaxError("unmatched '}'", t.line, t.column, source)
            stack.pop()
            i += 1
            continue
        if t.kind != "word":
            raise SceneSyntaxError(f"expected a key or block name, got {t.text!r}", t.line, t.column, source)
        nxt = toks[i + 1] if i + 1 < len(toks) else None
        if nxt is not None and nxt.text == "{" and nxt.kind == "punct":
            b = Block(t.text, line=t.line, column=t.column)
            stack[-1].blocks.append(b)
            stack.append(b)
            i += 2
            continue
        if nxt is None or not (nxt.kind == "punct" and nxt.text == "="):
            where = nxt or t
            raise SceneSyntaxError(f"expected '=' or '{{' after {t.text!r}", where.line, where.column, source)
        j = i + 2
        values = []
        while j < len(toks):
            v = toks[j]
            if v.kind == "punct":
                if v.text == "}":
                    break
                raise SceneSyntaxError(f"unexpected {v.text!r} in value of {t.text!r}", v.line, v.column, source)
            after = toks[j + 1] if j + 1 < len(toks) else None
            if v.kind == "word" and after is not None and after.kind == "punct" and after.text in "={":
                break
            values.append(v)
            j += 1
        if not values:
            raise SceneSyntaxError(f"missing value for {t.text!r}", t.line, t.column, source)
        stack[-1].entries.append(Entry(t.text, values, t.line, t.column))
        i = j
    if len(stack) > 1:
        b = stack[-1]
        raise SceneSyntaxError(f"block {b.name!r} is never closed", b.line, b.column, source)
    return root


# --------------------------------------------------------------------------
# schema
#
# field kinds: len (cm/mm), angle (deg), px (integer pixels), num, int, bool,
# word, str; ``n`` is the value count (-1: any even count >= 4)

@dataclass(frozen=True)
class Field:
    kind: str
    n: int = 1
    repeat: bool = False
    words: tuple = ()  # bare words accepted in place of a number


UNITS = {"len": ("cm", "mm"), "angle": ("deg",), "px": ("px",), "per_cm": ("per_cm",)}

SCHEMA = {
    "orb": {
        "center": Field("len", 3), "radius": Field("len"), "thickness": Field("len", words=("solid",)),
        "lateral_shift": Field("len"), "present": Field("bool"),
    },
    "material": {
        "kind": Field("word", words=("glass", "calcite")), "ior": Field("num"),
        "ior_ordinary": Field("num"), "ior_extraordinary": Field("num"),
        "tint": Field("num", 3), "absorption": Field("per_cm", 3),
    },
    "camera": {
        "position": Field("len", 3), "look_at": Field("len", 3), "up": Field("num", 3),
        "vertical_fov": Field("angle"), "width": Field("px"), "height": Field("px"),
    },
    "lights": {
        "direction": Field("num", 3, repeat=True), "main_radiance": Field("num", 3),
        "ambient_radiance": Field("num", 3),
    },
    "cone": {
        "elevation": Field("angle"), "azimuth": Field("angle"), "half_angle": Field("angle"),
        "count": Field("int"),
    },
    "relief": {
        "distance": Field("len"), "width": Field("len"), "height": Field("len"),
        "albedo": Field("num", 3), "convergence": Field("len", 2, words=("none",)),
        "texture": Field("str", words=("none",)), "features": Field("word", words=("default", "explicit")),
    },
    "fold": {
        "angle": Field("angle"), "offset": Field("len"), "start": Field("len"), "end": Field("len"),
        "bend_radius": Field("len"), "bend_angle": Field("angle"), "width": Field("len"), "darkness": Field("num"), "ridge_height": Field("len"),
        "ridge_width": Field("len"), "shadow_width": Field("len"), "shadow_darkness": Field("num"),
        "exempt": Field("bool"),
    },
    "band": {
        "angle": Field("angle"), "offset": Field("len"), "width": Field("len"),
        "albedo": Field("num", 3), "softness": Field("len"),
    },
    "stroke": {"points": Field("len", -1), "width": Field("len"), "darkness": Field("num")},
    "hand": {
        "enabled": Field("bool"), "center": Field("len", 3), "radii": Field("len", 3),
        "albedo": Field("num", 3), "mesh": Field("str", words=("none",)), "resolution": Field("int"),
    },
    "render": {
        "spp": Field("int"), "max_depth": Field("int"), "seed": Field("int"), "gamma": Field("num"),
        "strict": Field("bool"),
    },
}
CHILDREN = {
    "<root>": ("orb", "camera", "lights", "relief", "hand", "render"),
    "orb": ("material",), "lights": ("cone",), "relief": ("fold", "band", "stroke"),
}
REPEATED_BLOCKS = ("fold", "band", "stroke")


def split_key(block: str, key: str):
    """Split ``key`` into (base name, unit) against the block's schema."""
    fields = SCHEMA.get(block, {})
    if key in fields:
        return key, None
    for unit in ("per_cm", "cm", "mm", "deg", "px"):
        suffix = "_" + unit
        if key.endswith(suffix) and key[: -len(suffix)] in fields:
            return key[: -len(suffix)], unit
    return None, None


class _Reader:
    """Validated access to one block's entries."""

    def __init__(self, block: Block, source: str):
        self.block = block
        self.source = source
        self.values = {}
        fields = SCHEMA[block.name]
        for e in block.entries:
            base, unit = split_key(block.name, e.key)
            if base is None:
                raise UnknownKeyError(f"{e.key!r} is not a key of block {block.name!r}",
                                      e.line, e.column, source)
            spec = fields[base]
            if base in self.values and not spec.repeat:
                raise SceneSyntaxError(f"duplicate key {base!r}", e.line, e.column, source)
            value = self._convert(e, base, unit, spec)
            if spec.repeat:
                self.values.setdefault(base, []).append(value)
            else:
                self.values[base] = value
        allowed = CHILDREN.get(block.name, ())
        seen = set()
        for b in block.blocks:
            if b.name not in allowed:
                raise UnknownKeyError(f"block {b.name!r} is not allowed inside {block.name!r}",
                                      b.line, b.column, source)
            if b.name in seen and b.name not in REPEATED_BLOCKS:
                raise SceneSyntaxError(f"duplicate block {b.name!r}", b.line, b.column, source)
            seen.add(b.name)

    def _err(self, cls, msg, e):
        return cls(msg, e.line, e.column, self.source)

    def _convert(self, e: Entry, base, unit, spec: Field):
        toks = e.values
        if len(toks) == 1 and toks[0].kind == "word" and toks[0].text in spec.words:
            return toks[0].text
        need = UNITS.get(spec.kind)
        if need is None and unit is not None:
            raise self._err(UnitViolationError, f"{base!r} is dimensionless; drop the '_{unit}' suffix", e)
        if need is not None and unit not in need:
            want = " or ".join("_" + u for u in need)
            raise self._err(UnitViolationError, f"{e.key!r} needs a unit suffix {want}", e)
        if spec.kind == "word":
            if len(toks) != 1 or toks[0].text not in spec.words:
                raise self._err(SceneSyntaxError, f"{base!r} must be one of {', '.join(spec.words)}", e)
            return toks[0].text
        if spec.kind == "str":
            if len(toks) != 1 or toks[0].kind != "string":
                raise self._err(SceneSyntaxError, f"{base!r} needs a quoted string", e)
            return toks[0].text
        if spec.kind == "bool":
            if len(toks) != 1 or toks[0].text not in ("true", "false"):
                raise self._err(SceneSyntaxError, f"{base!r} must be true or false", e)
            return toks[0].text == "true"
        if spec.n == -1:
            if len(toks) < 4 or len(toks) % 2:
                raise self._err(SceneSyntaxError, f"{base!r} needs an even number (>= 4) of values", e)
        elif len(toks) != spec.n:
            raise self._err(SceneSyntaxError, f"{base!r} takes {spec.n} value(s), got {len(toks)}", e)
        nums = []
        for t in toks:
            if t.kind != "word":
                raise SceneSyntaxError("expected a number, got a string", t.line, t.column, self.source)
            try:
                x = float(t.text)
            except ValueError:
                raise SceneSyntaxError(f"expected a number, got {t.text!r}", t.line, t.column,
                                       self.source) from None
            if not math.isfinite(x):
                raise SceneSyntaxError(f"non-finite number {t.text!r}", t.line, t.column, self.source)
            if spec.kind in ("int", "px"):
                if x != int(x):
                    raise SceneSyntaxError(f"{base!r} must be an integer", t.line, t.column, self.source)
                # exact for integers beyond 2**53 (64-bit seeds)
                x = int(t.text) if re.fullmatch(r"[+-]?\d+", t.text) else int(x)
            elif unit == "mm":
                x = x / 10.0
            nums.append(x)
        return nums[0] if spec.n == 1 else tuple(nums)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def child(self, name) -> Optional[Block]:
        for b in self.block.blocks:
            if b.name == name:
                return b
        return None

    def children(self, name):
        return [b for b in self.block.blocks if b.name == name]


def _kwargs(reader: _Reader, mapping: dict) -> dict:
    return {attr: reader.values[key] for key, attr in mapping.items() if key in reader.values}


def _construct(cls, kwargs, block: Block, source: str):
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise UnitViolationError(f"{block.name}: {exc}", block.line, block.column, source) from None


def _build_material(block: Optional[Block], source: str):
    if block is None:
        return OrbSpec().material
    r = _Reader(block, source)
    tint = r.get("tint", (1.0, 1.0, 1.0))
    if r.get("kind", "glass") == "calcite":
        if "ior" in r.values or "absorption" in r.values:
            raise UnknownKeyError("calcite takes ior_ordinary / ior_extraordinary and tint only",
                                  block.line, block.column, source)
        return _construct(CalciteSpec, dict(_kwargs(r, {"ior_ordinary": "ior_ordinary",
                                                        "ior_extraordinary": "ior_extraordinary"}), tint=tint),
                          block, source)
    if "ior_ordinary" in r.values or "ior_extraordinary" in r.values:
        raise UnknownKeyError("ior_ordinary / ior_extraordinary need kind = calcite",
                              block.line, block.column, source)
    return _construct(DielectricSpec, dict(_kwargs(r, {"ior": "ior", "absorption": "absorption_per_cm"}),
                                           tint=tint), block, source)


def _build_orb(block: Optional[Block], source: str) -> OrbSpec:
    if block is None:
        return OrbSpec()
    r = _Reader(block, source)
    kw = _kwargs(r, {"center": "center", "radius": "radius", "lateral_shift": "lateral_shift",
                     "present": "present"})
    radius = kw.get("radius", OrbSpec.radius)
    th = r.get("thickness")
    if th == "solid":
        kw["thickness"] = radius
    elif th is not None:
        kw["thickness"] = th
    kw["material"] = _build_material(r.child("material"), source)
    return _construct(OrbSpec, kw, block, source)


def _build_lights(block: Optional[Block], source: str) -> LightRig:
    if block is None:
        return LightRig()
    r = _Reader(block, source)
    kw = _kwargs(r, {"main_radiance": "main_radiance", "ambient_radiance": "ambient_radiance"})
    cone = r.child("cone")
    if cone is not None and "direction" in r.values:
        raise SceneSyntaxError("give either direction keys or a cone block, not both",
                               cone.line, cone.column, source)
    if cone is not None:
        c = _Reader(cone, source)
        try:
            kw["main_directions"] = cone_directions(c.get("elevation", 60.0), c.get("azimuth", -20.0),
                                                    c.get("half_angle", 5.0), c.get("count", 5))
        except ValueError as exc:
            raise UnitViolationError(str(exc), cone.line, cone.column, source) from None
    elif "direction" in r.values:
        kw["main_directions"] = tuple(r.values["direction"])
    return _construct(LightRig, kw, block, source)


_FOLD_KEYS = {k: k for k in SCHEMA["fold"]}
_BAND_KEYS = {k: k for k in SCHEMA["band"]}


def _build_relief(block: Optional[Block], source: str) -> ReliefSpec:
    if block is None:
        return ReliefSpec()
    r = _Reader(block, source)
    kw = _kwargs(r, {"distance": "distance", "width": "width", "height": "height", "albedo": "albedo"})
    conv = r.get("convergence")
    if conv is not None:
        kw["convergence"] = None if conv == "none" else conv
    tex = r.get("texture")
    if tex is not None:
        kw["texture"] = None if tex == "none" else tex
    folds = [_construct(FoldSpec, _kwargs(_Reader(b, source), _FOLD_KEYS), b, source)
             for b in r.children("fold")]
    bands = [_construct(BandSpec, _kwargs(_Reader(b, source), _BAND_KEYS), b, source)
             for b in r.children("band")]
    strokes = []
    for b in r.children("stroke"):
        sr = _Reader(b, source)
        pts = sr.get("points")
        if pts is None:
            raise SceneSyntaxError("stroke needs points_cm", b.line, b.column, source)
        skw = _kwargs(sr, {"width": "width", "darkness": "darkness"})
        skw["points"] = tuple(zip(pts[0::2], pts[1::2]))
        strokes.append(_construct(StrokeSpec, skw, b, source))
    explicit = r.get("features", "default") == "explicit" or folds or bands or strokes
    kw["folds"] = tuple(folds) if explicit else DEFAULT_FOLDS
    kw["bands"] = tuple(bands) if explicit else DEFAULT_BANDS
    kw["strokes"] = tuple(strokes)
    return _construct(ReliefSpec, kw, block, source)


def build_config(root: Block, source: str = "<scene>") -> SceneConfig:
    for e in root.entries:
        raise UnknownKeyError(f"top-level key {e.key!r}; keys belong inside a block", e.line, e.column, source)
    seen = set()
    for b in root.blocks:
        if b.name not in CHILDREN["<root>"]:
            raise UnknownKeyError(f"unknown block {b.name!r}", b.line, b.column, source)
        if b.name in seen:
            raise SceneSyntaxError(f"duplicate block {b.name!r}", b.line, b.column, source)
        seen.add(b.name)
    blocks = {b.name: b for b in root.blocks}

    orb = _build_orb(blocks.get("orb"), source)
    camera = SceneConfig().camera
    if "camera" in blocks:
        r = _Reader(blocks["camera"], source)
        camera = _construct(CameraSpec, _kwargs(r, {k: k for k in SCHEMA["camera"]}), blocks["camera"], source)
    lights = _build_lights(blocks.get("lights"), source)
    relief = _build_relief(blocks.get("relief"), source)
    hand = HandSpec()
    if "hand" in blocks:
        r = _Reader(blocks["hand"], source)
        kw = _kwargs(r, {k: k for k in SCHEMA["hand"]})
        if kw.get("mesh") == "none":
            kw["mesh"] = None
        hand = _construct(HandSpec, kw, blocks["hand"], source)
    render = RenderSettings()
    if "render" in blocks:
        r = _Reader(blocks["render"], source)
        kw = _kwargs(r, {"spp": "samples_per_pixel", "max_depth": "max_depth", "seed": "seed",
                         "gamma": "gamma", "strict": "strict"})
        render = _construct(RenderSettings, kw, blocks["render"], source)
    return SceneConfig(orb=orb, camera=camera, lights=lights, relief=relief, hand=hand, render=render)


def parse_scene(text, source: str = "<scene>") -> SceneConfig:
    """Parse scene text (str or UTF-8 bytes) into a validated :class:`SceneConfig`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SceneSyntaxError(f"file is not UTF-8 ({exc.reason} at byte {exc.start})", 1, 1, source) from None
    return build_config(parse_tree(text, source), source)


def load_scene(path) -> SceneConfig:
    with open(path, "rb") as fh:
        return parse_scene(fh.read(), source=str(path))


# --------------------------------------------------------------------------
# canonical output


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    return str(int(x)) + ".0" if x.is_integer() and abs(x) < 1e15 else repr(x)


def _vals(v) -> str:
    if isinstance(v, (tuple, list)):
        return " ".join(_num(x) for x in v)
    return _num(v)


def to_tree(config: SceneConfig) -> Block:
    """Canonical block tree of ``config``: every field explicit, lengths in cm."""

    def block(name, pairs, children=()):
        b = Block(name)
        for k, v in pairs:
            if isinstance(v, list):  # repeated key
                for item in v:
                    b.entries.append(Entry(k, _raw(item)))
            else:
                b.entries.append(Entry(k, _raw(v)))
        b.blocks.extend(children)
        return b

    o = config.orb
    m = o.material
    if isinstance(m, CalciteSpec):
        mat = block("material", [("kind", "calcite"), ("ior_ordinary", m.ior_ordinary),
                                 ("ior_extraordinary", m.ior_extraordinary), ("tint", m.tint)])
    else:
        mat = block("material", [("kind", "glass"), ("ior", m.ior), ("tint", m.tint),
                                 ("absorption_per_cm", m.absorption_per_cm)])
    orb = block("orb", [("center_cm", o.center), ("radius_cm", o.radius),
                        ("thickness", "solid") if o.solid else ("thickness_cm", o.thickness),
                        ("lateral_shift_cm", o.lateral_shift), ("present", o.present)], [mat])
    c = config.camera
    cam = block("camera", [("position_cm", c.position), ("look_at_cm", c.look_at), ("up", c.up),
                           ("vertical_fov_deg", c.vertical_fov), ("width_px", int(c.width)),
                           ("height_px", int(c.height))])
    li = config.lights
    lights = block("lights", [("direction", list(li.main_directions)), ("main_radiance", li.main_radiance),
                              ("ambient_radiance", li.ambient_radiance)])
    rl = config.relief
    feats = []
    for f in rl.folds:
        feats.append(block("fold", [("angle_deg", f.angle), ("offset_cm", f.offset), ("start_cm", f.start),
                                    ("end_cm", f.end), ("bend_radius_cm", f.bend_radius),
                                    ("bend_angle_deg", f.bend_angle), ("width_cm", f.width), ("darkness", f.darkness),
                                    ("ridge_height_cm", f.ridge_height), ("ridge_width_cm", f.ridge_width),
                                    ("shadow_width_cm", f.shadow_width),
                                    ("shadow_darkness", f.shadow_darkness), ("exempt", f.exempt)]))
    for b in rl.bands:
        feats.append(block("band", [("angle_deg", b.angle), ("offset_cm", b.offset), ("width_cm", b.width),
                                    ("albedo", b.albedo), ("softness_cm", b.softness)]))
    for s in rl.strokes:
        feats.append(block("stroke", [("points_cm", tuple(x for p in s.points for x in p)),
                                      ("width_cm", s.width), ("darkness", s.darkness)]))
    relief = block("relief", [("distance_cm", rl.distance), ("width_cm", rl.width), ("height_cm", rl.height),
                              ("albedo", rl.albedo),
                              ("convergence_cm", "none" if rl.convergence is None else rl.convergence),
                              ("texture", "none" if rl.texture is None else _Str(rl.texture)),
                              ("features", "explicit")], feats)
    h = config.hand
    hand = block("hand", [("enabled", h.enabled), ("center_cm", h.center), ("radii_cm", h.radii),
                          ("albedo", h.albedo), ("mesh", "none" if h.mesh is None else _Str(h.mesh)),
                          ("resolution", h.resolution)])
    r = config.render
    render = block("render", [("spp", r.samples_per_pixel), ("max_depth", r.max_depth), ("seed", r.seed),
                              ("gamma", r.gamma), ("strict", r.strict)])
    root = Block("<root>")
    root.blocks = [orb, cam, lights, relief, hand, render]
    return root


class _Str(str):
    """Marks a value that must be written quoted."""


def _raw(v):
    if isinstance(v, _Str):
        return [Token("string", str(v), 0, 0)]
    if isinstance(v, str):
        return [Token("word", v, 0, 0)]
    return [Token("word", t, 0, 0) for t in _vals(v).split()]


def write_tree(root: Block) -> str:
    lines = []

    def emit(b: Block, indent: int):
        pad = "  " * indent
        lines.append(f"{pad}{b.name} {{")
        for e in b.entries:
            vals = " ".join(_quote(t.text) if t.kind == "string" else t.text for t in e.values)
            lines.append(f"{pad}  {e.key} = {vals}")
        for c in b.blocks:
            emit(c, indent + 1)
        lines.append(f"{pad}}}")

    for b in root.blocks:
        emit(b, 0)
    return "\n".join(lines) + "\n"


def serialize_scene(config: SceneConfig) -> str:
    return write_tree(to_tree(config))


# --------------------------------------------------------------------------
# dotted overrides

_SEGMENT = re.compile(r"^([a-z_]+)(?:\[(\d+)\])?$")


def apply_overrides(config: SceneConfig, overrides) -> SceneConfig:
    """Apply ``{"block.sub.key_unit": value}`` (or ``"path=value"`` strings).

    Repeated blocks are indexed, e.g. ``relief.fold[4].darkness``. Values are
    numbers, sequences of numbers, or scene-file text such as ``"solid"``.
    """
    if isinstance(overrides, dict):
        items = list(overrides.items())
    else:
        items = []
        for spec in overrides:
            if "=" not in spec:
                raise SceneSyntaxError(f"override {spec!r} must look like path=value", 0, 0, "--set")
            k, v = spec.split("=", 1)
            items.append((k.strip(), v.strip()))
    if not items:
        return config
    root = to_tree(config)
    for path, value in items:
        _set_path(root, path, value)
    return build_config(root, source="--set")


def _set_path(root: Block, path: str, value) -> None:
    parts = path.split(".")
    if len(parts) < 2:
        raise UnknownKeyError(f"override path {path!r} needs block.key", 0, 0, "--set")
    node = root
    for seg in parts[:-1]:
        m = _SEGMENT.match(seg)
        if not m:
            raise UnknownKeyError(f"bad path segment {seg!r} in {path!r}", 0, 0, "--set")
        name, idx = m.group(1), m.group(2)
        matches = [b for b in node.blocks if b.name == name]
        if name not in CHILDREN.get(node.name, ()):
            raise UnknownKeyError(f"no block {name!r} in {node.name!r} ({path!r})", 0, 0, "--set")
        i = int(idx) if idx is not None else 0
        if i >= len(matches):
            if idx is None and not matches:
                b = Block(name)
                node.blocks.append(b)
                matches = [b]
            else:
                raise UnknownKeyError(f"{path!r}: only {len(matches)} {name!r} block(s)", 0, 0, "--set")
        node = matches[i]
    key = parts[-1]
    base, _ = split_key(node.name, key)
    if base is None:
        raise UnknownKeyError(f"{key!r} is not a key of block {node.name!r} ({path!r})", 0, 0, "--set")
    node.entries = [e for e in node.entries if split_key(node.name, e.key)[0] != base]
    if isinstance(value, str):
        toks = [t for t in tokenize(value, "--set")]
        if not toks:
            raise SceneSyntaxError(f"empty value for {path!r}", 0, 0, "--set")
    else:
        toks = _raw(value)
    node.entries.append(Entry(key, toks))
