import typing

# nested mapping of field name -> problem description (None: no problem)
ProblemDict = dict[str, typing.Union[None, str, 'ProblemDict']]

_SELF_KEY = 'problem_with_this_key'


def _attach(nested: ProblemDict, msg: str) -> ProblemDict:
    nested = dict(nested)
    nested[_SELF_KEY] = msg if _SELF_KEY not in nested else '\n'.join([nested[_SELF_KEY], msg])
    return nested


def merge_problem_dicts(a: ProblemDict, b: ProblemDict) -> ProblemDict:
    """Merge b into a in place: nested dicts merge recursively, messages for the same key
    are joined by newlines, and a message meeting a nested dict is stored under the
    nested dict's 'problem_with_this_key' entry."""
    for key, new in b.items():
        if key not in a or a[key] is None:
            a[key] = new
            continue
        old = a[key]
        if new is None:
            continue
        if isinstance(old, dict) and isinstance(new, dict):
            merge_problem_dicts(old, new)
        elif isinstance(old, dict):
            a[key] = _attach(old, new)
        elif isinstance(new, dict):
            a[key] = _attach(new, old)
        else:
            a[key] = '\n'.join([old, new])
    return a
