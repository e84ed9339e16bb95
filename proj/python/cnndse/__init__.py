"""CNN design-space exploration: accounting, modifications, Fire generation, scaling."""

import json

from . import _cnndse
from ._cnndse import NotFoundError, ValidationError

__all__ = [
    "NotFoundError",
    "ValidationError",
    "Workbench",
    "analyze",
    "builtin_names",
    "count_design_space",
]


def builtin_names():
    return list(_cnndse.builtin_names())


def analyze(arch, batch=1, bytes=4, bias=True):
    """`arch` is a builtin name or an architecture document (dict)."""
    return json.loads(_cnndse.analyze(json.dumps(arch), batch, bytes, bias))


def count_design_space(slots, options):
    return int(_cnndse.count_design_space(slots, options))


class Workbench:
    """The HTTP API, called in-process. Errors raise instead of returning a status."""

    def __init__(self, workspace=None):
        self._service = _cnndse.Service(str(workspace) if workspace else "")

    def request(self, method, path, query=None, body=None):
        text = "" if body is None else json.dumps(body)
        query = {k: str(v) for k, v in (query or {}).items()}
        status, payload = self._service.request(method, path, query, text)
        doc = json.loads(payload)
        if status >= 400:
            if status == 404:
                raise NotFoundError(doc.get("error", "not found"))
            raise ValidationError(doc.get("error", "request failed"))
        return doc

    def architectures(self):
        return self.request("GET", "/api/architectures")

    def architecture(self, name):
        return self.request("GET", f"/api/architectures/{name}")

    def save(self, arch):
        return self.request("POST", "/api/architectures", body=arch)

    def analysis(self, name, batch=1, bytes=4, bias=True):
        query = {"batch": batch, "bytes": bytes, "bias": "true" if bias else "false"}
        return self.request("GET", f"/api/architectures/{name}/analysis", query)

    def diff(self, baseline, mods, batch=1, **kwargs):
        return self.request("POST", "/api/diff", body={"baseline": baseline, "mods": mods,
                                                       "batch": batch, **kwargs})

    def sweep(self, vary, values, meta=None, **kwargs):
        body = {"vary": vary, "values": values, **kwargs}
        if meta is not None:
            body["meta"] = meta
        return self.request("POST", "/api/sweep", body=body)

    def scale(self, arch, cluster=None, workers=None, **kwargs):
        body = {"arch": arch, **kwargs}
        if cluster is not None:
            body["cluster"] = cluster
        if workers is not None:
            body["workers"] = workers
        return self.request("POST", "/api/scale", body=body)
