import hashlib


def HashFile(path: str) -> str:
    hash_ = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(2**16), b""):
            hash_.update(chunk)

    return hash_.hexdigest()
