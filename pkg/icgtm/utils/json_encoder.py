import json

import numpy as np


class JSONEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        return super().default(obj)


def serialize_doc(doc):
    """Convert nested dicts/lists holding NumPy values into JSON-safe Python values"""
    if doc is None:
        return None

    if isinstance(doc, (list, tuple)):
        return [serialize_doc(item) for item in doc]

    if isinstance(doc, np.ndarray):
        return doc.tolist()

    if isinstance(doc, np.generic):
        return doc.item()

    if not isinstance(doc, dict):
        return doc

    return {key: serialize_doc(value) for key, value in doc.items()}


def dumps(doc, **kwargs) -> str:
    return json.dumps(serialize_doc(doc), cls=JSONEncoder, **kwargs)
