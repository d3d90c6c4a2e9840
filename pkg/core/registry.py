from typing import Type, Dict, List

from core.base import DispatcherBase


class DispatcherRegistry:
    _dispatchers: Dict[str, Type[DispatcherBase]] = {}

    @classmethod
    def register(cls, name: str):
        def decorator(dispatcher_cls: Type[DispatcherBase]):
            dispatcher_cls.objective = name
            cls._dispatchers[name] = dispatcher_cls
            return dispatcher_cls
        return decorator

    @classmethod
    def get(cls, name: str) -> Type[DispatcherBase]:
        try:
            return cls._dispatchers[name]
        except KeyError:
            raise KeyError(f"Unknown dispatch objective '{name}'. Available: {cls.list()}") from None

    @classmethod
    def create(cls, name: str) -> DispatcherBase:
        return cls.get(name)()

    @classmethod
    def list(cls) -> List[str]:
        return sorted(cls._dispatchers.keys())
