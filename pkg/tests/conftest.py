import sys
from pathlib import Path
from random import Random

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import WORDS


@pytest.fixture
def tmp_sources(tmp_path):
    """A small on-disk source directory with sources.json sidecar."""
    import json

    sources = tmp_path / "sources"
    sources.mkdir()
    mapping = {}
    rng = Random(11)
    for language in ("en", "fr"):
        for domain in ("cds", "wikipedia"):
            lines = []
            for _ in range(400):
                words = [rng.choice(WORDS) for _ in range(rng.randint(4, 10))]
                lines.append(" ".join(words) + ".")
            name = f"{language}_{domain}.txt"
            (sources / name).write_text(" ".join(lines), encoding="utf-8")
            mapping[name] = {"domain": domain, "language": language}
    (sources / "sources.json").write_text(json.dumps(mapping), encoding="utf-8")
    return sources
