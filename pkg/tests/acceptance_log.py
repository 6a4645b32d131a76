"""Per-criterion results, shared by the acceptance tests and the summary hook."""

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
