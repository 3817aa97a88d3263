import os
import json
import typing
from typing import Any, Dict, List, Union

from .exceptions import ConfigError


def _jsonToDict(json_: str) -> dict:
    try:
        return json.loads(json_)
    except json.decoder.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}")


class DataVariable:
    _varNamesMap: Dict[str, Dict[int, List[str]]] = {}

    def __init__(self, type_: str, version: int, variable: str):
        names = self._varNamesMap.setdefault(type_, {}).setdefault(version, [])
        if variable not in names:
            names.append(variable)

    @classmethod
    def getVarNames(cls, type_: str, version: int) -> List[str]:
        """Names declared for type_ at every version up to and including version."""
        versions = cls._varNamesMap.get(type_, {})
        return [name for ver in range(version + 1) for name in versions.get(ver, [])]


def _defaultFor(annotation):
    origin = typing.get_origin(annotation)
    if annotation in (list, dict, str):
        return annotation()
    if annotation == bool:
        return False
    if annotation == int:
        return 0
    if annotation == float:
        return 0.0
    if origin in (dict, list):
        return origin()
    return None


def _coerce(annotation, name: str, value: Any):
    origin = typing.get_origin(annotation)
    try:
        if annotation == bool:
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered in ("1", "true", "yes", "on"):
                    return True
                if lowered in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if annotation == int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if annotation == float:
            return float(value)
        if annotation == str:
            return str(value)
        if origin == list:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            (itemType,) = typing.get_args(annotation) or (Any,)
            if itemType is Any:
                return list(value)
            return [_coerce(itemType, name, v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for '{name}'")
    return value


class DataMetaclass(type):
    def __new__(mcs, name, bases, attrs):
        def init(orig_init):
            def __init__(self, *args, **kwargs):
                for varName, annotation in typing.get_type_hints(self.__class__).items():
                    if getattr(self, varName, None) is not None:
                        continue

                    default = _defaultFor(annotation)
                    if default is not None:
                        setattr(self, varName, default)

                orig_init(self, *args, **kwargs)

            return __init__

        cls = super(DataMetaclass, mcs).__new__(mcs, name, bases, attrs)

        if "__init__" in attrs:
            cls.__init__ = init(cls.__init__)

        return cls


class DataClass(metaclass=DataMetaclass):
    formatVersion: int = 0
    formatType: str = ""

    def varNames(self) -> List[str]:
        return [v for v in DataVariable.getVarNames(self.formatType, self.formatVersion)
                if v not in ("formatType", "formatVersion")]

    def setValues(self, values: Dict[str, Any], strict=True):
        hints = typing.get_type_hints(self.__class__)
        known = self.varNames()

        for varName, value in values.items():
            if varName in ("formatType", "formatVersion"):
                continue
            if varName not in known:
                if strict:
                    raise ConfigError(f"unknown configuration key '{varName}'")
                continue

            setattr(self, varName, _coerce(hints.get(varName, Any), varName, value))

    def loadFromJson(self, json_: Union[str, dict]) -> bool:
        """False when the document carries no formatVersion; nothing is loaded then."""
        data = _jsonToDict(json_) if isinstance(json_, str) else dict(json_)

        formatType = data.pop("formatType", self.formatType)
        if formatType != self.formatType:
            raise ConfigError(f"expected format '{self.formatType}', got '{formatType}'")

        formatVersion = data.pop("formatVersion", None)
        if formatVersion is None:
            return False
        if formatVersion > self.formatVersion:
            raise ConfigError(f"format version {formatVersion} is newer than supported {self.formatVersion}")

        known = DataVariable.getVarNames(self.formatType, formatVersion)
        self.setValues({k: v for k, v in data.items() if k in known})
        return True

    def loadJsonFile(self, path: str) -> bool:
        if not os.path.exists(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as file:
            return self.loadFromJson(file.read())

    def getDict(self) -> Dict[str, Any]:
        data = {}
        for varName in DataVariable.getVarNames(self.formatType, self.formatVersion):
            value = getattr(self, varName, None)
            data[varName] = list(value) if isinstance(value, (list, tuple)) else value
        return data

    def saveJsonFile(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as file:
            json.dump(self.getDict(), file, indent=4, sort_keys=True)
