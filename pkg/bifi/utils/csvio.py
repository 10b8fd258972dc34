import json
import os

import pandas as pd

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: str) -> None:
    """17 significant digits, nan and inf spelled literally."""
    frame.to_csv(path, float_format=FLOAT_FORMAT, na_rep="nan", index=False)


def write_json(data: dict, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(data, f, indent=2)


def write_text(text: str, path: str) -> None:
    with open(path, 'w') as f:
        f.write(text)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
