from bugnet.events import ChangeEvent

ACCEPTANCE = []


def verdict(passed):
    return "SKIP" if passed is None else ("PASS" if passed else "FAIL")


def record_criterion(name, passed, detail=""):
    """``passed`` is None for an optional check that could not run."""
    ACCEPTANCE.append((name, passed, detail))
    print(f"[{verdict(passed)}] {name} {detail}")


def cc(t, a, b, bug="1"):
    return ChangeEvent(bug, t, a, "CC_ADD", b)


def assign(t, a, b, bug="1"):
    return ChangeEvent(bug, t, a, "ASSIGN", b)
