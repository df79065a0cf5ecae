#!/usr/bin/env python3
"""Prepends the Apache-2.0 notice to project sources that lack it."""

import pathlib
import sys

NOTICE = """Copyright 2026 The fingerloc Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License."""

COMMENT = {
    ".h": "//", ".cc": "//", ".cpp": "//",
    ".cmake": "#", ".py": "#", ".txt": "#",
    ".ini": ";", ".descriptor": "#",
}
DIRS = ["include", "src", "tests", "tools", "bench", "scripts", "configs"]


def commented(prefix):
    return "\n".join((prefix + " " + line).rstrip() for line in NOTICE.splitlines()) + "\n"


def process(path, root):
    prefix = COMMENT.get(path.suffix)
    if prefix is None or (path.suffix == ".txt" and path.name != "CMakeLists.txt"):
        return False
    text = path.read_text()
    if "Licensed under the Apache License" in text[:1200]:
        return False
    header = commented(prefix)
    if text.startswith("#!"):
        first, _, rest = text.partition("\n")
        text = first + "\n" + header + "\n" + rest
    else:
        text = header + "\n" + text
    path.write_text(text)
    print(path.relative_to(root))
    return True


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".").resolve()
    files = [root / "CMakeLists.txt"]
    for d in DIRS:
        files += sorted(p for p in (root / d).rglob("*") if p.is_file())
    changed = sum(process(p, root) for p in files if p.exists())
    print(f"{changed} file(s) updated")


if __name__ == "__main__":
    main()
