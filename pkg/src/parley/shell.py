"""Dialogue shell: wires the agency together and runs it.

Topology: user input is injected as a ``tell utterance(...)`` addressed to
the knowledge mediator, whose flow graph routes it to the interpretation
manager; recognized dialogue moves flow back through the mediator to the
dialogue move engine, whose system moves are routed to the output stage.
The capability broker and the train-schedule expert hang off the same bus
and are reached only through recruitment.

Runs as an interactive REPL, in scripted mode (``--script``), and/or with a
WebSocket bridge (``--serve``) feeding the browser console.
"""

from __future__ import annotations

import argparse
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .bridge import BridgeServer, EventStream, file_sink
from .broker import Ontology, make_broker_agent
from .bus import Bus
from .dme import make_dme_agent
from .expert import make_expert_agent
from .flow import make_flow_agent
from .fluents import load_scenario
from .interpretation import (
    InterpreterConfig,
    load_interpreter_config_lines,
    make_interpretation_agent,
)
from .islands import load_grammar
from .kqml import KqmlMessage, Performative
from .runtime import Agent, TickDriver, parse_behavioural_rule
from .terms import Compound, Str, Term, print_term

USER = "user"
MEDIATOR = "km"
UTTERANCE_TYPE = "utterance_text"


class FixtureError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


@dataclass
class ShellConfig:
    grammar_path: str
    flow_path: str
    ontology_path: str
    domain_csv: str
    scenario_path: str | None = None
    theta: Fraction | None = None
    tau: Fraction = Fraction(1, 5)
    n_best: int = 5
    beam: int = 16
    serve_port: int | None = None
    trace_sink: str | None = None
    script_path: str | None = None
    tick_cap: int = 64

    def __post_init__(self) -> None:
        if self.theta is not None and not (0 < self.theta <= 1):
            raise ValueError("theta must be in (0,1]")
        if not (0 <= self.tau <= 1):
            raise ValueError("tau must be in [0,1]")
        if self.n_best < 1:
            raise ValueError("n_best must be >= 1")


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FixtureError(path, e.strerror or str(e)) from None


class Agency:
    """The live system: bus, agents, a deterministic round-robin driver."""

    def __init__(self, config: ShellConfig):
        self.config = config
        self.events = EventStream()
        self.bus = Bus(on_event=self.events.emit_trace)
        self._lock = threading.Lock()
        self.output_moves: list[Term] = []
        self._turn_outputs: list[str] = []

        try:
            grammar_text = _read(config.grammar_path)
            grammar = load_grammar(grammar_text)
            confidences, spot_categories = load_interpreter_config_lines(grammar_text)
        except FixtureError:
            raise
        except ValueError as e:
            raise FixtureError(config.grammar_path, e) from None
        try:
            ontology = Ontology.load(_read(config.ontology_path))
        except FixtureError:
            raise
        except ValueError as e:
            raise FixtureError(config.ontology_path, e) from None

        self.broker_agent, self.broker = make_broker_agent(self.bus, ontology)
        self.flow_agent, self.flow = make_flow_agent(
            self.bus, MEDIATOR, authorized={"admin"}
        )
        try:
            self.flow.load(_read(config.flow_path))
        except FixtureError:
            raise
        except ValueError as e:
            raise FixtureError(config.flow_path, e) from None
        self.flow.register_content_type(UTTERANCE_TYPE)

        interpreter_config = InterpreterConfig(
            grammar=grammar,
            spot_categories=spot_categories,
            confidences=confidences,
            theta=config.theta,
            n_best=config.n_best,
            beam=config.beam,
            plausibility=config.tau,
            route_receiver=MEDIATOR,
        )
        self.im_agent, self.interpreter = make_interpretation_agent(
            self.bus, interpreter_config, on_nbest=self._on_nbest
        )
        self.dme_agent, self.dme = make_dme_agent(
            self.bus, route_receiver=MEDIATOR
        )
        try:
            self.expert_agent, self.expert = make_expert_agent(
                self.bus, config.domain_csv
            )
        except (OSError, ValueError) as e:
            raise FixtureError(config.domain_csv, e) from None
        self.scenario = None
        if config.scenario_path:
            try:
                self.scenario = load_scenario(_read(config.scenario_path))
            except FixtureError:
                raise
            except ValueError as e:
                raise FixtureError(config.scenario_path, e) from None

        self.out_agent = self._make_output_agent()
        self.bus.register(USER)
        self.driver = TickDriver(self.bus, [
            self.broker_agent, self.flow_agent, self.im_agent,
            self.dme_agent, self.expert_agent, self.out_agent,
        ])
        self._last_state_revision = -1
        self.drive()  # settle startup traffic (the expert's advertisement)

    # -- wiring helpers ------------------------------------------------------

    def _make_output_agent(self) -> Agent:
        agent = Agent("out", self.bus)

        def collect(ag: Agent, args: Term):
            act = args.args[1]
            self.output_moves.append(act)
            self._turn_outputs.append(print_term(act))
            self.events.emit_system_move(print_term(act))
            return []

        agent.register_private("collect_move", collect)
        agent.install_rule(parse_behavioural_rule(
            "rule on_system_move: when (tell S move(Speaker, Act)) "
            "then private(collect_move, move(Speaker, Act))"
        ))
        return agent

    def _on_nbest(self, utterance: str, hypotheses) -> None:
        self.events.emit_nbest(utterance, [
            {
                "act": print_term(h.act),
                "score": float(h.score),
                "span_coverage": float(h.span_coverage),
                "utterance_coverage": float(h.utterance_coverage),
                "module": h.module,
                "span": list(h.span),
            }
            for h in hypotheses
        ])

    # -- driving ---------------------------------------------------------------

    def drive(self) -> bool:
        """Rounds until quiescence or the tick cap; True when quiesced."""
        quiesced = False
        for _ in range(self.config.tick_cap):
            reports = self.driver.run_round()
            self._export_state_if_changed()
            if all(r.quiet for r in reports) and not self.bus.any_pending():
                quiesced = True
                break
        self.bus.drain(USER)  # replies addressed to the human are not queued
        return quiesced

    def _export_state_if_changed(self) -> None:
        if self.dme.revision != self._last_state_revision:
            self._last_state_revision = self.dme.revision
            self.events.emit_state(self.dme.state.snapshot())

    def submit_utterance(self, text: str) -> tuple[list[str], bool]:
        """Inject one user utterance; returns (system acts, quiesced flag)."""
        with self._lock:
            self._turn_outputs = []
            self.bus.send(KqmlMessage(
                performative=Performative.TELL,
                sender=USER,
                receiver=MEDIATOR,
                content=Compound("utterance", (Str(text),)),
                content_type=UTTERANCE_TYPE,
            ))
            quiesced = self.drive()
            return list(self._turn_outputs), quiesced

    def state_snapshot(self) -> dict:
        return self.dme.state.snapshot()

    def nbest_snapshot(self) -> list[dict]:
        return [
            {"act": print_term(h.act), "score": float(h.score),
             "module": h.module}
            for h in self.interpreter.last_hypotheses
        ]


def run(config: ShellConfig, input_lines=None, output=None) -> int:
    """REPL / script session; returns the process exit code."""
    out = output or sys.stdout

    def emit(line: str) -> None:
        out.write(line + "\n")
        out.flush()

    try:
        agency = Agency(config)
    except FixtureError as e:
        emit(f"error: {e}")
        return 2

    sink_fp = None
    if config.trace_sink:
        if config.trace_sink == "-":
            agency.events.add_sink(file_sink(sys.stdout), replay=True)
        else:
            sink_fp = open(config.trace_sink, "w", encoding="utf-8")
            agency.events.add_sink(file_sink(sink_fp), replay=True)

    server = None
    if config.serve_port is not None:
        server = BridgeServer(
            agency.events,
            submit=lambda text: agency.submit_utterance(text),
            get_state=agency.state_snapshot,
            port=config.serve_port,
        ).start()
        emit(f"bridge: ws://127.0.0.1:{server.port}/bridge")

    scripted = input_lines is not None
    if config.script_path:
        try:
            input_lines = _read(config.script_path).splitlines()
        except FixtureError as e:
            emit(f"error: {e}")
            return 2
        scripted = True

    def turn(line: str) -> int | None:
        line = line.strip()
        if not line:
            return None
        if scripted:
            emit(f"> {line}")
        if line == "/quit":
            return 0
        if line == "/state":
            from .bridge import dumps

            emit(dumps(agency.state_snapshot()))
            return None
        if line == "/nbest":
            for h in agency.nbest_snapshot():
                emit(f"{h['score']:.4f} {h['module']:>7}  {h['act']}")
            return None
        moves, quiesced = agency.submit_utterance(line)
        for act in moves:
            emit(f"system: {act}")
        if not quiesced:
            emit("warning: tick cap reached before quiescence")
        return None

    code = 0
    try:
        if input_lines is not None:
            for line in input_lines:
                result = turn(line)
                if result is not None:
                    code = result
                    break
        else:
            while True:
                try:
                    line = input("> ")
                except EOFError:
                    break
                result = turn(line)
                if result is not None:
                    code = result
                    break
            if server is not None and input_lines is None:
                pass
    finally:
        if server is not None:
            server.stop()
        if sink_fp is not None:
            sink_fp.close()
    return code


def serve_forever(config: ShellConfig) -> int:
    """Headless serve mode: keep the bridge up until interrupted."""
    try:
        agency = Agency(config)
    except FixtureError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    server = BridgeServer(
        agency.events,
        submit=lambda text: agency.submit_utterance(text),
        get_state=agency.state_snapshot,
        port=config.serve_port or 0,
    ).start()
    print(f"bridge: ws://127.0.0.1:{server.port}/bridge", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="parley-shell",
        description="Run the dialogue agency (REPL, script mode, or bridge).",
    )
    p.add_argument("--grammar", required=True, help="grammar fixture path")
    p.add_argument("--flow", required=True, help="flow graph fixture path")
    p.add_argument("--ontology", required=True, help="type ontology fixture path")
    p.add_argument("--domain", required=True, help="schedule CSV path")
    p.add_argument("--scenario", help="optional scenario fixture path")
    p.add_argument("--theta", type=Fraction, help="parser coverage threshold")
    p.add_argument("--tau", type=Fraction, default=Fraction(1, 5),
                   help="plausibility threshold (default 0.2)")
    p.add_argument("--nbest", type=int, default=5)
    p.add_argument("--beam", type=int, default=16)
    p.add_argument("--serve", type=int, metavar="PORT",
                   help="expose the WebSocket bridge on PORT (0 = ephemeral)")
    p.add_argument("--trace", metavar="PATH|-",
                   help="write the bridge event stream as JSON Lines")
    p.add_argument("--script", metavar="PATH",
                   help="read utterances from PATH instead of the terminal")
    return p


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        config = ShellConfig(
            grammar_path=args.grammar,
            flow_path=args.flow,
            ontology_path=args.ontology,
            domain_csv=args.domain,
            scenario_path=args.scenario,
            theta=args.theta,
            tau=args.tau,
            n_best=args.nbest,
            beam=args.beam,
            serve_port=args.serve,
            trace_sink=args.trace,
            script_path=args.script,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if config.serve_port is not None and not config.script_path:
        return serve_forever(config)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
