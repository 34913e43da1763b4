"""parley: an agent-oriented dialogue framework.

Autonomous agents with mental states exchange typed KQML messages over a
hub bus; user input is parsed robustly by an island parser at a configurable
coverage threshold, ranked into n-best dialogue-act hypotheses, and drives
an information-state dialogue engine whose update rules are behavioural
rules.  A capability broker matches recruit requests to advertised
capabilities by unification plus type subsumption, and a fluent reasoner
answers scenario queries over incomplete world states.
"""

from .broker import CapabilityAd, CapabilityBroker, Ontology
from .bus import Bus, Disposition, TcpBridge, TraceEvent
from .dme import DialogueMoveEngine, InformationState, make_dme_agent
from .expert import ScheduleExpert, make_expert_agent
from .flow import FlowManager, make_flow_agent
from .fluents import ActionSpec, FluentReasoner, Narrative, Truth, load_scenario
from .interpretation import (
    Hypothesis,
    InterpretationManager,
    InterpreterConfig,
    UnderspecifiedLF,
    enumerate_resolutions,
    tokenize,
)
from .islands import Constituent, Grammar, GrammarRule, load_grammar, parse, spot
from .kqml import BROADCAST, KqmlMessage, Performative, decode, encode
from .runtime import (
    Agent,
    BehaviouralRule,
    Commit,
    Holds,
    MentalPath,
    MessagePattern,
    NotHolds,
    Private,
    SendMessage,
    TickDriver,
    parse_behavioural_rule,
)
from .shell import Agency, ShellConfig
from .terms import (
    Atom,
    Compound,
    Num,
    Str,
    Subst,
    Term,
    Var,
    alpha_equal,
    apply,
    parse_term,
    print_term,
    unify,
)
from .viewfinder import (
    AttitudeType,
    Environment,
    HornRule,
    Stereotype,
    parse_horn_rule,
)

__version__ = "0.1.0"
