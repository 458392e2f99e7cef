import sys
import typing

from typeguard import TypeCheckerCallable, checker_lookup_functions
from typeguard._checkers import check_typed_dict

# TypedDict variant whose fields may carry default values. Instances are plain dicts;
# defaults are filled in on construction and listed in _field_defaults.


class _DefaultsMixin:
    def apply_defaults(self, overwrite: bool = False):
        for key, value in self._field_defaults.items():
            if overwrite or key not in self:
                self[key] = value

    def non_default_items(self) -> dict[str, typing.Any]:
        return {k: v for k, v in self.items() if k not in self._field_defaults or self._field_defaults[k]!=v}


class _TypedDictDefaultMeta(type):
    def __new__(cls, name, bases, ns, total=True):
        for base in bases:
            if type(base) is not _TypedDictDefaultMeta:
                raise TypeError(f'{name}: a TypedDictDefault can only derive from other TypedDictDefault types')
        tp = type.__new__(_TypedDictDefaultMeta, name, (dict, _DefaultsMixin), ns)

        inherited: dict[str, typing.Any] = {}
        defaults: dict[str, typing.Any] = {}
        required: set[str] = set()
        optional: set[str] = set()
        for base in bases:
            inherited.update(base.__dict__.get('__annotations__', {}))
            defaults.update(base.__dict__.get('_field_defaults', {}))
            required |= base.__dict__.get('__required_keys__', frozenset())
            optional |= base.__dict__.get('__optional_keys__', frozenset())

        own = {k: typing._type_check(t, f'{name}.{k}: field types must be types', module=tp.__module__)
               for k, t in ns.get('__annotations__', {}).items()}
        (required if total else optional).update(own)

        seen_default = None
        for field in own:
            if field in ns:
                defaults[field] = ns[field]
                delattr(tp, field)
                seen_default = field
            elif seen_default is not None:
                raise TypeError(f'{name}: field {field} without a default follows defaulted field {seen_default}')

        tp.__annotations__      = {**inherited, **own}
        tp.__required_keys__    = frozenset(required)
        tp.__optional_keys__    = frozenset(optional)
        tp.__total__            = total
        tp._field_defaults      = defaults
        return tp

    def __call__(cls, *args, **kwargs):
        obj = super().__call__(*args, **kwargs)
        obj.apply_defaults()
        return obj

    def __subclasscheck__(cls, other):
        raise TypeError('TypedDictDefault does not support instance and class checks')

    __instancecheck__ = __subclasscheck__


def TypedDictDefault(typename, fields=None, /, *, total=True, **kwargs):
    """Functional form: TypedDictDefault('Name', {'a': int}) or TypedDictDefault('Name', a=int).
    Subclass TypedDictDefault to declare defaults."""
    if fields is None:
        fields = kwargs
    elif kwargs:
        raise TypeError('TypedDictDefault takes either a dict or keyword arguments, not both')
    ns = {'__annotations__': dict(fields), '__module__': sys._getframe(1).f_globals.get('__name__', '__main__')}
    return _TypedDictDefaultMeta(typename, (), ns, total=total)

_TypedDictDefault = type.__new__(_TypedDictDefaultMeta, 'TypedDictDefault', (), {})
TypedDictDefault.__mro_entries__ = lambda bases: (_TypedDictDefault,)


def is_typeddictdefault(tp) -> bool:
    return isinstance(tp, _TypedDictDefaultMeta)


# typeguard checks these like a regular TypedDict
def _checker_lookup(origin_type: typing.Any, args: tuple[typing.Any, ...], extras: tuple[typing.Any, ...]) -> TypeCheckerCallable | None:
    return check_typed_dict if is_typeddictdefault(origin_type) else None

checker_lookup_functions.append(_checker_lookup)
