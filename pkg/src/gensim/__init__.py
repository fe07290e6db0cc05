"""General, large-scale, correctable multi-agent social simulation engine."""

from .agent import (
    Agent,
    AgentProfile,
    MemoryConfig,
    MemoryRecord,
    PromptTemplate,
    load_population,
    render_prompt,
)
from .environment import Environment, Intervention, InterviewExchange, interview, search_agents
from .gateway import (
    ChatRequest,
    ChatResponse,
    DeterministicMockBackend,
    EndpointSpec,
    HttpBackend,
    StochasticMockBackend,
    build_backend,
    pool_dispatch,
    retry_with_backoff,
)
from .interaction import Role, Transcript, Turn, run_agent_mode, run_script_mode
from .persistence import checkpoint, restore
from .scheduler import ActionEvent, RoundReport, Simulation, SimulationConfig
from .scenarios import make_scenario, spawn_population

__version__ = "0.1.0"
