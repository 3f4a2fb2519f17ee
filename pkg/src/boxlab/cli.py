"""Command-line client.

Every subcommand is a thin HTTP client over the service in ``service.py``:
by default requests run in-process against the ASGI app (no server needed);
``--server URL`` points at a remote instance instead.

Exit codes: 0 success, 2 invalid input, 3 undecided at this scale,
4 failed claim in ``reproduce``.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNDECIDED = 3
EXIT_CLAIM_FAILED = 4


class Client:
    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app, raise_server_exceptions=False)

    def call(self, method: str, path: str, payload: dict | None = None) -> dict:
        r = self._client.request(method, path, json=payload)
        if r.status_code == 409:
            click.echo(f"undecided: {r.json().get('detail', '')}", err=True)
            sys.exit(EXIT_UNDECIDED)
        if r.status_code >= 400:
            try:
                detail = r.json().get("detail", r.text)
            except ValueError:
                detail = r.text
            click.echo(f"error: {detail}", err=True)
            sys.exit(EXIT_INVALID)
        return r.json()


def _read_json(path: str) -> dict:
    try:
        with click.open_file(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_INVALID)


def _emit(data: dict, as_json: bool, text: str | None = None):
    if as_json or text is None:
        click.echo(json.dumps(data, indent=2))
    else:
        click.echo(text)


@click.group()
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx, server):
    """Model, certify, and transform multipartite correlation boxes."""
    ctx.obj = Client(server)


@main.command()
@click.argument("box_file")
@click.option("--tolerance", type=float, default=1e-12, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the full JSON report.")
@click.pass_obj
def validate(client: Client, box_file, tolerance, as_json):
    """Check normalization/nonnegativity and the no-signalling conditions."""
    box = _read_json(box_file)
    data = client.call("POST", "/validate", {"box": box, "tolerance": tolerance})
    _emit(
        data,
        as_json,
        f"valid: {data['valid']}  no-signalling: {data['no_signalling']}  "
        f"(norm err {data['max_normalization_error']:.2e}, "
        f"signalling {data['max_signalling_discrepancy']:.2e})",
    )
    if not data["valid"]:
        sys.exit(EXIT_INVALID)


@main.command()
@click.argument("box_file")
@click.option(
    "--class",
    "class_tag",
    type=click.Choice(["local", "bl", "nsbl", "tobl", "tobl-general"]),
    required=True,
)
@click.option("--partition", default=None, help='Bipartition such as "1|2,3" (1-based).')
@click.option("--mode", type=click.Choice(["rational", "float"]), default=None)
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--independent-weights", is_flag=True,
              help="Relaxed time-ordered check with per-direction weights.")
@click.option("--json", "as_json", is_flag=True, help="Emit the full certificate JSON.")
@click.pass_obj
def membership(client: Client, box_file, class_tag, partition, mode, tolerance,
               independent_weights, as_json):
    """Certified membership check against a correlation class."""
    box = _read_json(box_file)
    data = client.call(
        "POST",
        "/membership",
        {
            "box": box,
            "class_tag": class_tag,
            "partition": partition,
            "mode": mode,
            "tolerance": tolerance,
            "independent_weights": independent_weights,
        },
    )
    extras = []
    if data.get("residual") is not None:
        extras.append(f"residual {data['residual']:.2e}")
    if data.get("margin") is not None:
        extras.append(f"margin {data['margin']:.2e}")
    suffix = f" ({', '.join(extras)})" if extras else ""
    _emit(data, as_json, f"{data['class']}: {data['verdict']}{suffix}")
    if data["verdict"] == "Undecided":
        sys.exit(EXIT_UNDECIDED)


@main.command()
@click.argument("box_file")
@click.option("--protocol", "protocol_file", default=None, help="Protocol JSON file.")
@click.option("--paper-fig1b", is_flag=True, help="Built-in sequential wiring example.")
@click.option("--paper-broadcast", is_flag=True, help="Built-in broadcast protocol.")
@click.option("--tolerance", type=float, default=1e-12, show_default=True)
@click.pass_obj
def wire(client: Client, box_file, protocol_file, paper_fig1b, paper_broadcast, tolerance):
    """Apply a protocol (preparation steps + wirings) to a box; emits box JSON."""
    chosen = sum(map(bool, (protocol_file, paper_fig1b, paper_broadcast)))
    if chosen != 1:
        click.echo(
            "error: pass exactly one of --protocol, --paper-fig1b, --paper-broadcast",
            err=True,
        )
        sys.exit(EXIT_INVALID)
    if protocol_file:
        protocol = _read_json(protocol_file)
    else:
        from .schemas import protocol_to_model
        from .wiring import Protocol, paper_broadcast_protocol, paper_fig1b_wiring

        if paper_fig1b:
            proto = Protocol(wirings=(paper_fig1b_wiring(),))
        else:
            proto = paper_broadcast_protocol()
        protocol = json.loads(protocol_to_model(proto).model_dump_json(by_alias=True))
    box = _read_json(box_file)
    data = client.call(
        "POST", "/wire", {"box": box, "protocol": protocol, "tolerance": tolerance}
    )
    click.echo(json.dumps(data["box"], indent=2))


@main.command()
@click.argument("box_file", required=False)
@click.option("--functional", required=True,
              help="chsh, gyni, or a path to functional JSON.")
@click.option("--max-over", "max_over",
              type=click.Choice(["ns", "local", "nsbl", "tobl"]), default=None)
@click.option("--partition", default=None)
@click.option("--mode", type=click.Choice(["rational", "float"]), default="rational",
              show_default=True)
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def bell(client: Client, box_file, functional, max_over, partition, mode, tolerance,
         as_json):
    """Evaluate a Bell functional on a box, or maximize it over a class."""
    payload: dict = {}
    if functional in ("chsh", "gyni"):
        payload["functional"] = functional
    else:
        payload["functional_json"] = _read_json(functional)
    if max_over:
        payload.update(
            {"class_tag": max_over, "partition": partition, "mode": mode,
             "tolerance": tolerance}
        )
        data = client.call("POST", "/bell/max", payload)
        shown = data["exact"] if data.get("exact") else repr(data["value"])
        _emit(data, as_json, f"max over {max_over}: {shown}")
    else:
        if not box_file:
            click.echo("error: evaluation needs a box file", err=True)
            sys.exit(EXIT_INVALID)
        payload["box"] = _read_json(box_file)
        data = client.call("POST", "/bell/evaluate", payload)
        shown = data["exact"] if data.get("exact") else repr(data["value"])
        _emit(data, as_json, shown)


@main.command()
@click.argument("subcommand", type=click.Choice(["ghz-paper", "ghz"]))
@click.option("--angles", default=None,
              help='Per party, per input: "theta:0,theta:1.57;theta:0,theta:0.785".')
@click.pass_obj
def quantum(client: Client, subcommand, angles):
    """Emit a quantum box computed from the Born rule (box JSON on stdout)."""
    if subcommand == "ghz-paper":
        data = client.call("GET", "/quantum/ghz-paper")
    else:
        if not angles:
            click.echo("error: ghz needs --angles", err=True)
            sys.exit(EXIT_INVALID)
        parties = [party.split(",") for party in angles.split(";")]
        data = client.call("POST", "/quantum/ghz", {"angles": parties})
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.option("--tamper", type=float, default=0.0,
              help="Perturb one source-table entry (negative control).")
@click.option("--json", "as_json", is_flag=True, help="Emit the RunReport JSON.")
@click.pass_obj
def reproduce(client: Client, tamper, as_json):
    """Regenerate every headline number and check it; nonzero exit on failure."""
    data = client.call("POST", "/reproduce", {"tamper": tamper})
    if as_json:
        click.echo(json.dumps(data, indent=2))
    else:
        for c in data["claims"]:
            status = "PASS" if c["passed"] else "FAIL"
            value = f"  value={c['value']}" if c.get("value") is not None else ""
            click.echo(f"{status}  {c['name']}{value}  ({c['seconds']}s)")
        click.echo(f"overall: {'PASS' if data['passed'] else 'FAIL'} in {data['seconds']}s")
    if not data["passed"]:
        failing = next(c["name"] for c in data["claims"] if not c["passed"])
        click.echo(f"failed claim: {failing}", err=True)
        sys.exit(EXIT_CLAIM_FAILED)


if __name__ == "__main__":
    main()
