"""HTML to hierarchical documents: cleanup, split-rule cascade, enumeration
patterns, language heuristic, and the fuzzy terms-of-service link matcher.

Parsing is built on the stdlib HTMLParser with browser-like error recovery:
an open <p> is implicitly closed by any block-level start tag (so headings
are hoisted out of paragraphs), stray end tags are ignored, and orphan text
or inline runs sitting directly in a container get wrapped into paragraph
elements. Boilerplate (nav/header/footer/aside/script/style plus blocks
whose text is mostly link text) is dropped before any splitting.

The split cascade mirrors the order: section headings (h1-h6), bold text
starting with an enumeration pattern, list items, underlined text with an
enumeration pattern, and finally plain paragraphs starting with one. A rule
participates only when its selector occurs at least `min_occurrences` times
in the document (default 5).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .corpus import Corpus, Document, Section, section_from_texts
from .errors import EmptyDocumentError, ValidationError

# --- tag tree ---------------------------------------------------------------

VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)
# Start tags that implicitly close an open <p>, as a browser would.
P_CLOSERS = frozenset(
    "address article aside blockquote details div dl dt dd fieldset figcaption "
    "figure footer form h1 h2 h3 h4 h5 h6 header hgroup hr main menu nav ol p "
    "pre section table ul li".split()
)
INLINE_TAGS = frozenset(
    "a abbr b bdi bdo cite code data dfn em font i kbd mark q rb rp rt ruby s "
    "samp small span strong sub sup time u var wbr".split()
)
DROP_TAGS = frozenset(
    "script style noscript template head title meta link nav header footer "
    "aside iframe object embed svg canvas video audio picture source track "
    "button select option optgroup datalist input textarea label form map area".split()
)
WRAP_CONTAINERS = frozenset(
    "[document] html body div section article main blockquote center ul ol dl "
    "td th figure details".split()
)
LINK_DENSITY_BLOCKS = frozenset(
    "div p li ul ol dl table tr td section article blockquote".split()
)
LINK_DENSITY_LIMIT = 0.5


@dataclass
class TagNode:
    """One element of the normalized tree; children mix TagNode and text."""

    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["TagNode | str"] = field(default_factory=list)

    def iter_nodes(self):
        yield self
        for child in self.children:
            if isinstance(child, TagNode):
                yield from child.iter_nodes()

    def find_all(self, *tags: str) -> list["TagNode"]:
        return [n for n in self.iter_nodes() if n.tag in tags]

    @property
    def text(self) -> str:
        return collapse_ws(_gather_text(self))


TagTree = TagNode


def collapse_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def _gather_text(node: TagNode) -> str:
    parts: list[str] = []
    for child in node.children:
        if isinstance(child, str):
            parts.append(child)
        elif child.tag in INLINE_TAGS:
            parts.append(_gather_text(child))
        else:
            parts.append(" " + _gather_text(child) + " ")
    return "".join(parts)


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = TagNode("[document]")
        self.stack = [self.root]

    def _top(self) -> TagNode:
        return self.stack[-1]

    def handle_starttag(self, tag: str, attrs) -> None:
        tag = tag.lower()
        if tag in P_CLOSERS:
            # Close the nearest open <p>; <li> also closes an open <li>.
            for i in range(len(self.stack) - 1, 0, -1):
                if self.stack[i].tag == "p":
                    del self.stack[i:]
                    break
                if self.stack[i].tag not in INLINE_TAGS:
                    break
            if tag == "li":
                for i in range(len(self.stack) - 1, 0, -1):
                    if self.stack[i].tag == "li":
                        del self.stack[i:]
                        break
                    if self.stack[i].tag in ("ul", "ol"):
                        break
        node = TagNode(tag, dict(attrs))
        self._top().children.append(node)
        if tag not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag: str, attrs) -> None:
        self._top().children.append(TagNode(tag.lower(), dict(attrs)))

    def handle_endtag(self, tag: str) -> None:
        tag = tag.lower()
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # No matching open tag: ignore, as browsers do.

    def handle_data(self, data: str) -> None:
        if data:
            self._top().children.append(data)


def _decode(raw: bytes | str) -> str:
    if isinstance(raw, str):
        return raw
    head = raw[:2048]
    m = re.search(rb"charset=[\"']?([A-Za-z0-9_\-]+)", head)
    if m:
        try:
            return raw.decode(m.group(1).decode("ascii"), errors="replace")
        except LookupError:
            pass
    return raw.decode("utf-8", errors="replace")


def _drop_tags(node: TagNode) -> None:
    kept: list[TagNode | str] = []
    for child in node.children:
        if isinstance(child, TagNode):
            if child.tag in DROP_TAGS:
                continue
            _drop_tags(child)
        kept.append(child)
    node.children = kept


def _text_lengths(node: TagNode, in_link: bool = False) -> tuple[int, int]:
    """(total text length, text length inside <a>) for this subtree."""
    total = linked = 0
    for child in node.children:
        if isinstance(child, str):
            n = len(collapse_ws(child))
            total += n
            if in_link:
                linked += n
        else:
            t, l = _text_lengths(child, in_link or child.tag == "a")
            total += t
            linked += l
    return total, linked


def _drop_link_dense(node: TagNode) -> None:
    kept: list[TagNode | str] = []
    for child in node.children:
        if isinstance(child, TagNode) and child.tag in LINK_DENSITY_BLOCKS:
            total, linked = _text_lengths(child)
            if total > 0 and linked / total > LINK_DENSITY_LIMIT:
                continue
        if isinstance(child, TagNode):
            _drop_link_dense(child)
        kept.append(child)
    node.children = kept


def _replace_br(node: TagNode) -> None:
    out: list[TagNode | str] = []
    for child in node.children:
        if isinstance(child, TagNode):
            if child.tag == "br":
                out.append(" ")
                continue
            _replace_br(child)
        out.append(child)
    node.children = out


def _wrap_orphans(node: TagNode) -> None:
    """Group runs of bare text / inline elements under a container into <p>."""
    if node.tag in WRAP_CONTAINERS:
        rebuilt: list[TagNode | str] = []
        run: list[TagNode | str] = []

        def flush() -> None:
            if any(
                isinstance(c, str) and c.strip()
                or isinstance(c, TagNode) and collapse_ws(_gather_text(c))
                for c in run
            ):
                rebuilt.append(TagNode("p", {}, list(run)))
            run.clear()

        for child in node.children:
            orphan = isinstance(child, str) or child.tag in INLINE_TAGS
            if orphan:
                run.append(child)
            else:
                flush()
                rebuilt.append(child)
        flush()
        node.children = rebuilt
    for child in node.children:
        if isinstance(child, TagNode) and child.tag not in INLINE_TAGS:
            _wrap_orphans(child)


def _prune_empty(node: TagNode) -> bool:
    """Drop descendants with no visible text; returns True if node is empty."""
    kept: list[TagNode | str] = []
    for child in node.children:
        if isinstance(child, str):
            kept.append(child)
            continue
        if not _prune_empty(child):
            kept.append(child)
    node.children = kept
    return not collapse_ws(_gather_text(node))


def clean_html(raw: bytes | str) -> TagNode:
    """Parse and normalize HTML: boilerplate dropped, orphan text wrapped in
    paragraphs, headings hoisted out of paragraphs, empty elements pruned.

    Raises EmptyDocumentError when no visible text survives.
    """
    builder = _TreeBuilder()
    builder.feed(_decode(raw))
    builder.close()
    root = builder.root
    _drop_tags(root)
    _drop_link_dense(root)
    _replace_br(root)
    _wrap_orphans(root)
    if _prune_empty(root):
        raise EmptyDocumentError("no extractable text in document")
    return root


# --- language heuristic ------------------------------------------------------

# 50 common English function words; a paragraph with >= 2 hits counts as English.
ENGLISH_STOPWORDS = frozenset(
    """the of and to a in is you that it for on are with as this be at have
    from or by not but we your will can if our all any may use these which
    when out about into than them then so its such do shall other must""".split()
)

_WORD_RE = re.compile(r"[a-zA-Z']+")


def english_ratio(tree: TagNode, min_hits: int = 2) -> float:
    """Fraction of non-empty paragraph blocks whose stopword hits reach min_hits."""
    paragraphs = [n for n in tree.find_all("p", "li") if n.text]
    if not paragraphs:
        raise ValidationError("tree has no paragraphs")
    english = 0
    for node in paragraphs:
        words = _WORD_RE.findall(node.text.lower())
        hits = sum(1 for w in words if w in ENGLISH_STOPWORDS)
        if hits >= min_hits:
            english += 1
    return english / len(paragraphs)


# --- fuzzy ToS link matching -------------------------------------------------

TOS_LINK_PHRASES = (
    "Terms of Service",
    "Terms of Use",
    "Terms and Conditions",
    "Conditions of Use",
)
TOS_SIMILARITY_THRESHOLD = 0.75


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance, two-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _normalized_similarity(a: str, b: str) -> float:
    a = collapse_ws(a.casefold())
    b = collapse_ws(b.casefold())
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def match_tos_link(link_text: str) -> bool:
    """True when the text fuzzily matches any terms-of-service phrasing."""
    return any(
        _normalized_similarity(link_text, phrase) >= TOS_SIMILARITY_THRESHOLD
        for phrase in TOS_LINK_PHRASES
    )


# --- enumeration patterns ----------------------------------------------------

ENUM_PREFIXES = ("Part", "Section", "Article")

# Roman numerals i..xxxix: optional tens (x-xxx) then units; never empty.
_ROMAN_FULL = r"(?:x{1,3}(?:ix|iv|v?i{0,3}|v)?|ix|iv|v?i{1,3}|v)"
_KIND_PATTERNS = (
    ("latin_number", r"\d+"),
    ("roman_numeral", _ROMAN_FULL),
    ("letter", r"[a-z]"),
)
_DELIM = r"[.):]"


@dataclass(frozen=True)
class EnumPattern:
    kind: str  # "latin_number" | "roman_numeral" | "letter"
    prefix: str | None  # canonical "Part" / "Section" / "Article"
    raw: str  # the matched prefix of the source text


def _enum_regexes():
    for kind, token in _KIND_PATTERNS:
        with_prefix = re.compile(
            rf"(?P<prefix>{'|'.join(ENUM_PREFIXES)})\s+(?P<token>{token})"
            rf"(?:\s*{_DELIM}|\s*[-–—]+)?(?=\s|$)",
            re.IGNORECASE,
        )
        bare = re.compile(rf"(?P<token>{token}){_DELIM}(?=\s|$)", re.IGNORECASE)
        yield kind, with_prefix, bare


_ENUM_REGEXES = tuple(_enum_regexes())


def recognize_enumeration(text: str) -> EnumPattern | None:
    """Longest enumeration pattern anchored at the start of the text.

    Latin numbers, roman numerals (i-xxxix) and single letters, each followed
    by '.', ')' or ':' plus whitespace; with a Part/Section/Article prefix the
    delimiter may also be a dash or plain whitespace.
    """
    best: EnumPattern | None = None
    for kind, with_prefix, bare in _ENUM_REGEXES:
        for regex in (with_prefix, bare):
            m = regex.match(text)
            if not m:
                continue
            prefix = m.groupdict().get("prefix")
            if prefix is not None:
                prefix = prefix.capitalize()
            pattern = EnumPattern(kind=kind, prefix=prefix, raw=m.group(0))
            if best is None or len(pattern.raw) > len(best.raw):
                best = pattern
    return best


# --- split-rule cascade -------------------------------------------------------

SELECTORS = ("heading", "bold_enum", "list_item", "underline_enum", "para_enum")
DEFAULT_MIN_OCCURRENCES = 5

# Nesting depth of non-heading markers; headings use their own level 1-6.
_MARKER_LEVEL = {"bold_enum": 7, "list_item": 8, "underline_enum": 9, "para_enum": 10}

PREAMBLE_HEADING = "(preamble)"


@dataclass(frozen=True)
class SplitRule:
    priority: int
    selector: str
    min_occurrences: int = DEFAULT_MIN_OCCURRENCES

    def __post_init__(self) -> None:
        if self.selector not in SELECTORS:
            raise ValidationError(f"unknown selector {self.selector!r}")
        if self.min_occurrences < 1:
            raise ValidationError("min_occurrences must be >= 1")


def default_split_rules(min_occurrences: int = DEFAULT_MIN_OCCURRENCES) -> list[SplitRule]:
    return [
        SplitRule(priority=i + 1, selector=sel, min_occurrences=min_occurrences)
        for i, sel in enumerate(SELECTORS)
    ]


def _check_rule_order(rules: list[SplitRule]) -> list[SplitRule]:
    ordered = sorted(rules, key=lambda r: r.priority)
    expected = [s for s in SELECTORS if s in {r.selector for r in ordered}]
    if [r.selector for r in ordered] != expected:
        raise ValidationError(
            "split-rule priorities must follow the order "
            + " > ".join(SELECTORS)
        )
    return ordered


_HEADING_TAGS = ("h1", "h2", "h3", "h4", "h5", "h6")


@dataclass
class _Block:
    kind: str  # "heading" | "paragraph" | "list_item"
    level: int  # 1-6 for headings, 0 otherwise
    text: str
    lead_style: str | None = None  # "bold" | "underline"
    lead_text: str = ""
    rest_text: str = ""


def _own_text(node: TagNode) -> str:
    """Text of direct strings and inline descendants; nested blocks excluded."""
    parts: list[str] = []
    for child in node.children:
        if isinstance(child, str):
            parts.append(child)
        elif child.tag in INLINE_TAGS:
            parts.append(_gather_text(child))
    return collapse_ws("".join(parts))


def _lead_info(node: TagNode) -> tuple[str | None, str, str]:
    """Leading <b>/<strong>/<u> child of a block, plus the trailing inline text."""
    children = list(node.children)
    for i, child in enumerate(children):
        if isinstance(child, str):
            if child.strip():
                return None, "", ""
            continue
        if child.tag in ("b", "strong", "u"):
            style = "underline" if child.tag == "u" else "bold"
            lead = child.text
            rest = _own_text(TagNode("p", {}, children[i + 1 :]))
            if lead:
                return style, lead, rest
            return None, "", ""
        return None, "", ""
    return None, "", ""


def _linearize(tree: TagNode) -> list[_Block]:
    blocks: list[_Block] = []

    def walk(node: TagNode) -> None:
        for child in node.children:
            if not isinstance(child, TagNode):
                continue
            if child.tag in _HEADING_TAGS:
                text = child.text
                if text:
                    blocks.append(_Block("heading", int(child.tag[1]), text))
            elif child.tag in ("p", "li"):
                # Own text only: blocks nested inside an <li> surface separately.
                text = _own_text(child)
                if text:
                    style, lead, rest = _lead_info(child)
                    kind = "list_item" if child.tag == "li" else "paragraph"
                    blocks.append(_Block(kind, 0, text, style, lead, rest))
                walk(child)
            elif child.tag not in INLINE_TAGS:
                walk(child)

    walk(tree)
    return blocks


def _matches(block: _Block, selector: str) -> bool:
    if selector == "heading":
        return block.kind == "heading"
    if selector == "bold_enum":
        return (
            block.lead_style == "bold"
            and recognize_enumeration(block.lead_text) is not None
        )
    if selector == "underline_enum":
        return (
            block.lead_style == "underline"
            and recognize_enumeration(block.lead_text) is not None
        )
    if selector == "list_item":
        return block.kind == "list_item"
    if selector == "para_enum":
        return (
            block.kind == "paragraph"
            and block.lead_style is None
            and recognize_enumeration(block.text) is not None
        )
    raise ValidationError(f"unknown selector {selector!r}")


def extract_sections(
    tree: TagNode,
    rules: list[SplitRule] | None = None,
    doc_id: str = "doc",
    source_url: str | None = None,
) -> Document:
    """Apply the split cascade to a cleaned tree.

    Each active rule's markers open a new section; the marker's heading is
    pushed at its nesting level, so lower-priority markers nest under
    higher-priority ones and heading levels nest among themselves. Marker
    text for list items and enumerated plain paragraphs is the clause itself
    and is kept as the section's first paragraph; heading and bold/underline
    lead text is label-bearing and lives only in the heading path.
    """
    ordered = _check_rule_order(rules if rules is not None else default_split_rules())
    blocks = _linearize(tree)

    counts = {
        rule.selector: sum(1 for b in blocks if _matches(b, rule.selector))
        for rule in ordered
    }
    active = [rule for rule in ordered if counts[rule.selector] >= rule.min_occurrences]

    stack: list[tuple[int, str]] = []  # (level, heading text)
    sections: list[Section] = []
    current_path: tuple[str, ...] = (PREAMBLE_HEADING,)
    current_paras: list[str] = []

    def flush() -> None:
        nonlocal current_paras
        if current_paras:
            sections.append(section_from_texts(current_path, current_paras))
        current_paras = []

    for block in blocks:
        rule = next((r for r in active if _matches(block, r.selector)), None)
        if rule is None:
            current_paras.append(block.text)
            continue
        flush()
        if rule.selector == "heading":
            level, heading = block.level, block.text
        else:
            level = _MARKER_LEVEL[rule.selector]
            heading = (
                block.lead_text
                if rule.selector in ("bold_enum", "underline_enum")
                else block.text
            )
        while stack and stack[-1][0] >= level:
            stack.pop()
        stack.append((level, heading))
        current_path = tuple(text for _, text in stack)
        if rule.selector in ("bold_enum", "underline_enum") and block.rest_text:
            current_paras.append(block.rest_text)
        elif rule.selector in ("list_item", "para_enum"):
            current_paras.append(block.text)
    flush()

    if not sections:
        raise EmptyDocumentError(f"{doc_id}: no paragraph text to extract")
    return Document(id=doc_id, source_url=source_url, sections=tuple(sections))


def extract_file(
    path: str | Path,
    rules: list[SplitRule] | None = None,
    source_url: str | None = None,
) -> Document:
    path = Path(path)
    tree = clean_html(path.read_bytes())
    return extract_sections(tree, rules, doc_id=path.stem, source_url=source_url)


def extract_directory(
    directory: str | Path,
    min_occurrences: int = DEFAULT_MIN_OCCURRENCES,
    min_english_ratio: float = 0.5,
) -> tuple[Corpus, list[tuple[str, str]]]:
    """Extract every *.html file; returns (corpus, skipped [(file, reason)])."""
    directory = Path(directory)
    rules = default_split_rules(min_occurrences)
    documents: list[Document] = []
    skipped: list[tuple[str, str]] = []
    files = sorted(directory.glob("*.html"))
    if not files:
        raise ValidationError(f"no .html files under {directory}")
    for path in files:
        try:
            tree = clean_html(path.read_bytes())
            ratio = english_ratio(tree)
            if ratio < min_english_ratio:
                skipped.append((path.name, f"english ratio {ratio:.2f} < {min_english_ratio}"))
                continue
            documents.append(extract_sections(tree, rules, doc_id=path.stem))
        except (EmptyDocumentError, ValidationError) as exc:
            skipped.append((path.name, str(exc)))
    return Corpus(documents=documents), skipped
