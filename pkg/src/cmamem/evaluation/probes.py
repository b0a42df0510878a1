"""Synthetic behavioral probe corpora.

Every generator is a pure function of its seed. The seed only moves
timestamps and ingest order; statements and queries are fixed so per-query
results can be averaged across seeds.

Feature hashing at 256 dimensions maps unrelated words to the same bucket
often enough to swamp a one-word match. The wording of the temporal,
associative and disambiguation corpora was chosen so that prompt words never
share a bucket with unrelated corpus words, and context lines never share one
with the competing sense, under the default embedder. ``token_collisions``
checks this.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field

from ..embedding import EmbeddingProvider, HashingEmbedder, content_tokens

DAY = 86400.0
BASE_TS = 1_700_000_000.0

STUDIES = ("knowledge_update", "temporal", "associative", "disambiguation")


@dataclass(frozen=True)
class ProbeRecord:
    text: str
    session: str
    ts: float


@dataclass(frozen=True)
class ProbeQuery:
    prompt: str
    expected: tuple[str, ...]
    forbidden: tuple[str, ...] = ()
    context: tuple[str, ...] = ()
    rubric: tuple[str, ...] = ("accuracy",)
    now: float = 0.0
    k: int = 3
    qid: str = ""


@dataclass
class ProbeScenario:
    study: str
    name: str
    setup: list[ProbeRecord] = field(default_factory=list)
    queries: list[ProbeQuery] = field(default_factory=list)

    def validate(self) -> None:
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}")
        last: dict[str, float] = {}
        for rec in self.setup:
            if rec.session in last and rec.ts <= last[rec.session]:
                raise ValueError(f"{self.name}: timestamps not increasing in session {rec.session}")
            last[rec.session] = rec.ts
        for q in self.queries:
            if not q.expected:
                raise ValueError(f"{self.name}: query {q.qid} has no expected facts")


def corpus_bytes(scenarios: list[ProbeScenario]) -> bytes:
    """Canonical serialization, used to check generator determinism."""
    return json.dumps([asdict(s) for s in scenarios], sort_keys=True, separators=(",", ":")).encode()


# domain -> rows of (original, correction, query, change cue). The query
# leans on the original's wording and names the change event; the
# correction carries a correction marker and the cue.
KNOWLEDGE_DOMAINS: dict[str, tuple[tuple[str, str, str, str], ...]] = {
    "preferences": (
        ("Maya's usual cafe order is a flat white.",
         "Actually Maya switched her cafe order to iced matcha after starting the diet.",
         "What is Maya's usual cafe order after the diet?", "diet"),
        ("Tomas prefers window seats on long flights.",
         "Tomas changed to aisle seats instead after his knee checkup.",
         "Which seats does Tomas prefer on long flights after the checkup?", "checkup"),
        ("Lena's coding playlists are mostly jazz.",
         "Lena moved to ambient rain sounds during marathon training.",
         "What are Lena's coding playlists during marathon training?", "marathon"),
        ("Ravi's favorite lunch spot is the ramen bar downtown.",
         "Actually Ravi picks the salad counter for lunch due to the allergy.",
         "Where is Ravi's favorite lunch spot downtown given the allergy?", "allergy"),
        ("Iris likes her standing desk set to the tallest height.",
         "Since the retreat Iris switched her desk to a kneeling chair instead.",
         "How does Iris like her standing desk height after the retreat?", "retreat"),
    ),
    "technical_specs": (
        ("The billing service returns markup responses over plain requests.",
         "Correction: billing endpoints emit protobuf since the migration.",
         "What responses does the billing service return over plain requests after the migration?", "migration"),
        ("Search results are paginated at fifty items per page.",
         "After the rewrite, search switched to cursor tokens instead.",
         "How are search results paginated now after the rewrite?", "rewrite"),
        ("The ledger service stores amounts as floating point dollars.",
         "The ledger moved to integer cents during the upgrade.",
         "Does the ledger service store amounts as floating dollars after the upgrade?", "upgrade"),
        ("Inventory webhooks retry three times with a fixed delay.",
         "Inventory webhooks changed to exponential backoff in the overhaul.",
         "How do inventory webhooks retry with a delay after the overhaul?", "overhaul"),
        ("Payroll exports are generated as nightly spreadsheet files.",
         "Payroll switched to hourly parquet batches in the refactor.",
         "How are payroll exports generated as files after the refactor?", "refactor"),
    ),
    "debugging": (
        ("To fix the checkout freeze, restart the queue worker first.",
         "Clear the checkout session cache instead, per the postmortem.",
         "How do we fix the checkout freeze with the queue worker after the postmortem?", "postmortem"),
        ("Blurry thumbnails mean the resize job ran with low memory.",
         "No longer a memory issue: the retro traced blurry thumbnails to a codec flag.",
         "Why are thumbnails blurry when the resize job runs after the retro?", "retro"),
        ("Login timeouts come from the slow mailer on port 25.",
         "Actually the audit pinned login delays on expired redis keys.",
         "What causes login timeouts from the mailer on port 25 after the audit?", "audit"),
        ("Stuck exports clear when you reindex the scheduler table.",
         "The hotfix changed stuck exports to rerunning the template compiler instead.",
         "How do stuck exports clear from the scheduler after the hotfix?", "hotfix"),
        ("Sync conflicts vanish once you rebuild the local indexer.",
         "Per the escalation, sync conflicts now need the stale manifest deleted instead.",
         "How do sync conflicts vanish after the escalation?", "escalation"),
    ),
    "schedules": (
        ("The design review meets Tuesday at nine in room four.",
         "Actually design review moved to Thursday afternoon after the reorg.",
         "When does the design review meet in room four after the reorg?", "reorg"),
        ("Budget sign-off happens on the first Monday of the quarter.",
         "With the freeze, budget approvals changed to the last Friday.",
         "Which Monday of the quarter is budget sign-off after the freeze?", "freeze"),
        ("The roadmap sync starts at eight in the conference room.",
         "From now on the roadmap sync starts at eleven, per the offsite.",
         "When does the roadmap sync start in the conference room after the offsite?", "offsite"),
        ("Hiring panels run every Wednesday at noon.",
         "Over the holidays, hiring panels switched to Friday mornings.",
         "When do the hiring panels run after the holidays?", "holidays"),
        ("The security drill is scheduled for one o'clock on the rooftop.",
         "Since the relaunch, the drill moved to the parking deck at five.",
         "When is the security drill scheduled on the rooftop after the relaunch?", "relaunch"),
    ),
    "people": (
        ("Priscilla is the point of contact for vendor contracts.",
         "After the restructuring, Priscilla handles partner onboarding instead.",
         "What is Priscilla the point of contact for after the restructuring?", "restructuring"),
        ("Omar owns the mobile app release checklist.",
         "Omar switched to data privacy reviews with his promotion.",
         "Who owns the release checklist after Omar's promotion?", "promotion"),
        ("Keiko approves cloud cost exceptions for the platform group.",
         "Keiko no longer approves spending; after the transfer, Anton does.",
         "What cloud exceptions does Keiko approve for the platform group after the transfer?", "transfer"),
        ("Dmitri signs off on hardware purchase orders.",
         "During the sabbatical, Wanda took over Dmitri's signatures instead.",
         "Who signs purchase orders during Dmitri's sabbatical?", "sabbatical"),
        ("Amara answers press inquiries about the product launch.",
         "Since the realignment, communications staff field press inquiries instead of Amara.",
         "Who answers press inquiries about the product after the realignment?", "realignment"),
    ),
    "processes": (
        ("Travel expense reports go to Helen for approval.",
         "From now on travel expense reports go to the finance ops queue, per the memo.",
         "Where do travel expense reports go after the memo?", "memo"),
        ("New laptops are requested through the equipment spreadsheet.",
         "Per the handbook, laptops now come through the procurement portal instead.",
         "How are new laptops requested after the handbook?", "handbook"),
        ("Code reviews need two approvals from the senior engineers.",
         "The directive changed code reviews to one approval plus automated checks.",
         "How many approvals do code reviews need after the directive?", "directive"),
        ("Catering orders are placed with the front desk a week ahead.",
         "For compliance, catering is booked via the facilities form instead.",
         "How are catering orders placed with the front desk after compliance?", "compliance"),
        ("Software licenses are renewed by the helpdesk each spring.",
         "After the reorganization, software licenses are renewed by budget owners instead.",
         "Who renews software licenses at the helpdesk after the reorganization?", "reorganization"),
    ),
    "project_status": (
        ("The Falcon project is in beta with twenty pilot customers.",
         "Correction: Falcon is paused after the layoffs.",
         "What is the Falcon project status with the pilot customers after the layoffs?", "layoffs"),
        ("Orion is still in the design phase with wireframes pending.",
         "Orion actually shipped right after the demo.",
         "Is Orion still in design after the demo?", "demo"),
        ("Nimbus is blocked waiting on the vendor security review.",
         "After the pivot, Nimbus moved to internal testing instead.",
         "Is Nimbus blocked on the vendor review after the pivot?", "pivot"),
        ("Cobalt is staffing up and hiring three more developers.",
         "With the acquisition, Cobalt was cancelled outright.",
         "Is Cobalt still staffing up and hiring developers after the acquisition?", "acquisition"),
        ("Willow is in legal review before the public announcement.",
         "Willow went live at the launch event, no longer in review.",
         "Is Willow still in legal review before the announcement after the launch?", "launch"),
    ),
    "configuration": (
        ("The request timeout is set to thirty seconds in production.",
         "After the outage we changed the request timeout to ninety seconds.",
         "What is the request timeout set to in production after the outage?", "outage"),
        ("Max database connections are capped at two hundred per node.",
         "The benchmark showed max database connections should be five hundred instead.",
         "What are max database connections capped at after the benchmark?", "benchmark"),
        ("The log level for the gateway is debug.",
         "During the cleanup, gateway logging switched to warning.",
         "What is the log level for the gateway after the cleanup?", "cleanup"),
        ("Cache entries expire after five minutes on the edge servers.",
         "Following the spike, cache entries expire after one hour instead.",
         "When do cache entries expire on the edge after the spike?", "spike"),
        ("The retry limit for payment jobs is three attempts.",
         "Per the failover drill, payment tasks now try seven times instead.",
         "What is the retry limit for payment jobs after the failover?", "failover"),
    ),
}

KU_CONTEXT = ("Quick question about the {cue}.", "The {cue} wrapped up last week.")


def gen_knowledge_updates(seed: int = 0) -> list[ProbeScenario]:
    """40 fact/correction scenarios. At query time originals are 15 to 17
    days old and corrections 1 to 7 days old."""
    rng = random.Random(f"knowledge_update:{seed}")
    now = BASE_TS + 24 * DAY
    scenarios = []
    n = 0
    for domain, rows in KNOWLEDGE_DOMAINS.items():
        for j, (original, correction, prompt, cue) in enumerate(rows):
            t0 = now - rng.uniform(15.3 * DAY, 16.5 * DAY)
            t1 = now - rng.uniform(1 * DAY, 7 * DAY)
            name = f"ku{n:02d}-{domain}-{j}"
            setup = [
                ProbeRecord(original, f"{name}-a", t0),
                ProbeRecord(correction, f"{name}-b", t1),
            ]
            query = ProbeQuery(
                prompt=prompt,
                expected=(correction,),
                forbidden=(original,),
                context=tuple(c.format(cue=cue) for c in KU_CONTEXT),
                now=now, k=3, qid=name,
            )
            scenarios.append(ProbeScenario("knowledge_update", name, setup, [query]))
            n += 1
    return scenarios


# Ten episodes of six events; every event uses its own vocabulary. The text
# after "|" is the phrase a query uses to point at the event.
EPISODES = (
    ("The fire alarm rang during dinner.|fire alarm",
     "Jonas spilled paint on the carpet.|spilled paint",
     "A courier delivered ten boxes of printer ink.|courier delivered",
     "Rain flooded the cellar stairs.|cellar stairs",
     "The quarterly tax form got mailed.|tax form",
     "A stray dog chased a squirrel up an oak.|stray dog"),
    ("Grandpa lost his spare glasses.|spare glasses",
     "The internet router blinked red.|internet router",
     "Chloe baked lemon muffins.|lemon muffins",
     "A hailstorm dented the minivan hood.|hailstorm dented",
     "The landlord fixed the leaky faucet.|leaky faucet",
     "Twin toddlers built a pillow fort.|pillow fort"),
    ("The violinist snapped a string at rehearsal.|violinist snapped",
     "Somebody stole the garden flamingo.|garden flamingo",
     "A power surge fried the toaster.|power surge",
     "Meera won the chess tournament.|chess tournament",
     "The aquarium pump stopped bubbling.|aquarium pump",
     "Wind delayed the boat crossing.|boat crossing"),
    ("The bakery sold out of croissants.|bakery sold",
     "A wasp nest appeared under the gutter.|wasp nest",
     "Felix sprained his elbow jogging.|sprained elbow",
     "The gallery unveiled a dinosaur skeleton.|dinosaur skeleton",
     "Snow closed the mountain pass.|mountain pass",
     "The choir rehearsed a new hymn.|choir rehearsed"),
    ("A moving van blocked the driveway.|moving van",
     "The fridge motor began whirring.|fridge motor",
     "Hannah adopted a ginger kitten.|ginger kitten",
     "Lightning split the old oak.|lightning split",
     "The city waived parking fines.|parking fines",
     "A mariachi band played downtown.|mariachi band"),
    ("The dentist rescheduled an appointment.|dentist rescheduled",
     "A raccoon raided the compost bin.|raccoon raided",
     "Oliver finished assembling the wardrobe.|assembling wardrobe",
     "The furnace flame went out.|furnace flame",
     "Lanterns lit the harbor skyline.|harbor skyline",
     "A hot air balloon drifted overhead.|hot air"),
    ("The mail carrier brought a birthday postcard.|birthday postcard",
     "Termites damaged the porch railing.|porch railing",
     "Sofia learned to juggle oranges.|juggle oranges",
     "The bridge tollbooth went cashless.|tollbooth cashless",
     "A marathon runner collapsed near mile twenty.|runner collapsed",
     "Mom repainted the shutters teal.|repainted shutters"),
    ("The cathedral bells tolled unexpectedly.|cathedral bells",
     "A pipe burst beneath the sink.|pipe burst",
     "Ethan photographed a bald eagle.|bald eagle",
     "The drugstore mislabeled a prescription.|drugstore mislabeled",
     "Gravel trucks repaved the alley.|gravel trucks",
     "A magician performed at the library fundraiser.|magician performed"),
    ("The laundromat dryer shrank a towel.|laundromat dryer",
     "A parrot escaped from the pet store.|parrot escaped",
     "Grace sewed a wool scarf.|wool scarf",
     "The stadium scoreboard short circuited.|stadium scoreboard",
     "Frost killed the tomato seedlings.|tomato seedlings",
     "An ambulance alarm woke the baby.|ambulance alarm"),
    ("The locksmith replaced the deadbolt.|locksmith replaced",
     "A meteor streaked across the sky.|meteor streaked",
     "Liam carved a jack pumpkin.|jack pumpkin",
     "The subway escalator stalled.|subway escalator",
     "Vandals spraypainted the water tower.|water tower",
     "The orchestra tuned before the overture.|orchestra tuned"),
)

TEMPORAL_PROMPTS = ("What happened around the {anchor}?",)


def episode_events() -> list[list[tuple[str, str]]]:
    """(text, anchor phrase) per event; episodes hold 4, 5 or 6 events."""
    return [[tuple(ev.split("|")) for ev in events[: 4 + e % 3]] for e, events in enumerate(EPISODES)]


def anchor_positions(e: int, n: int) -> list[int]:
    return [e % 2, n // 2, n - 1]


def gen_temporal(seed: int = 0) -> list[ProbeScenario]:
    """Ten single-session episodes with three "around X" queries each."""
    rng = random.Random(f"temporal:{seed}")
    now = BASE_TS + 10 * DAY
    scenarios = []
    for e, events in enumerate(episode_events()):
        name = f"episode{e:02d}"
        t = BASE_TS + e * DAY + rng.uniform(0, 6 * 3600)
        setup = []
        for text, _ in events:
            setup.append(ProbeRecord(text, name, t))
            t += rng.uniform(120, 600)
        queries = []
        for qi, pos in enumerate(anchor_positions(e, len(events))):
            adjacent = [events[p][0] for p in (pos - 1, pos + 1) if 0 <= p < len(events)]
            queries.append(ProbeQuery(
                prompt=TEMPORAL_PROMPTS[0].format(anchor=events[pos][1]),
                expected=tuple(adjacent),
                rubric=("accuracy", "ordering"),
                now=now, k=3, qid=f"{name}-q{qi}",
            ))
        scenarios.append(ProbeScenario("temporal", name, setup, queries))
    return scenarios


# graph -> projects of (project, lead, tech, milestone, subsystem)
GRAPHS = (
    (('Atlas search ranking engine', 'Priya Raman', 'Kafka', 'Sunrise', 'Checkout'),
     ('Beacon incident alerting pipeline', 'Marco Bellini', 'Prometheus', 'Harvest', 'Paging'),
     ('Cedar customer fraud scorer', 'Fatima Okafor', 'Django', 'Glacier', 'Refunds')),
    (('Delta payment sharing store', 'Ingrid Solberg', 'XGBoost', 'Monsoon', 'Personalization'),
     ('Ember signon indexing gateway', 'Luis Ortega', 'Spark', 'Tundra', 'Authentication'),
     ('Fjord device reconciliation collector', 'Quinn Haddad', 'Fluentd', 'Equinox', 'Diagnostics')),
    (('Harbor fleet transcoding tracker', 'Samir Krishnan', 'Rasa', 'Zephyr', 'Logistics'),
     ('Iris ledger planning assistant', 'Wen Zhao', 'PyTorch', 'Borealis', 'Helpdesk'),
     ('Jade video scheduling backend', 'Cyrus Demir', 'Firebase', 'Tempest', 'Accounting')),
    (('Kite email export transcoder', 'Emil Farahani', 'Elasticsearch', 'Eclipse', 'Streaming'),
     ('Lumen sensor review planner', 'Gideon Lindqvist', 'FFmpeg', 'Horizon', 'Onboarding'),
     ('Maple traffic routing scheduler', 'Ivan Adler', 'Terraform', 'Summit', 'Reporting')),
    (('Nova hiring moderation service', 'Jonas Silva', 'Kubernetes', 'Nebula', 'Shipping'),
     ('Pylon energy matching detector', 'Keiko Jensen', 'Celery', 'Cascade', 'Scheduling'),
     ('Quartz weather forecasting robot', 'Mateo Costa', 'RabbitMQ', 'Voyager', 'Telephony')),
)

GRAPH_ROLES = ("tech", "milestone", "subsystem")

GRAPH_TEMPLATES = {
    "lead": "{person} leads the {project}.",
    "tech": "The {project} runs {entity}.",
    "milestone": "The {project} milestone is {entity}.",
    "subsystem": "The {project} powers {entity}.",
}

ASSOC_PROMPTS = {
    "tech": "Which stack does {person} depend on?",
    "milestone": "Which deadline is {person} racing toward?",
    "subsystem": "Which product area does {person} cover?",
}


def graph_statements(graph: tuple) -> list[tuple[str, str]]:
    """(role, text) for every statement of one knowledge graph."""
    out = []
    for project, lead, *entities in graph:
        out.append(("lead", GRAPH_TEMPLATES["lead"].format(person=lead, project=project)))
        for role, entity in zip(GRAPH_ROLES, entities):
            out.append((role, GRAPH_TEMPLATES[role].format(project=project, entity=entity)))
    return out


def gen_associative(seed: int = 0) -> list[ProbeScenario]:
    """Five project graphs, six two-hop queries each (person -> project ->
    attribute). The expected entity never appears in the prompt."""
    rng = random.Random(f"associative:{seed}")
    now = BASE_TS + 7 * DAY
    scenarios = []
    for g, graph in enumerate(GRAPHS):
        name = f"graph{g}"
        statements = graph_statements(graph)
        order = list(range(len(statements)))
        rng.shuffle(order)
        t = BASE_TS + g * DAY
        setup = []
        for i in order:
            setup.append(ProbeRecord(statements[i][1], f"{name}-s{i:02d}", t))
            t += rng.uniform(600, 3600)
        queries = []
        for p, (project, lead, *entities) in enumerate(graph):
            for role in (GRAPH_ROLES[(g + p) % 3], GRAPH_ROLES[(g + p + 1) % 3]):
                queries.append(ProbeQuery(
                    prompt=ASSOC_PROMPTS[role].format(person=lead),
                    expected=(entities[GRAPH_ROLES.index(role)],),
                    now=now, k=5, qid=f"{name}-p{p}-{role}",
                ))
        scenarios.append(ProbeScenario("associative", name, setup, queries))
    return scenarios


# term -> two senses of (statements, context lines)
SENSES: dict[str, tuple[tuple[tuple[str, ...], tuple[str, ...]], tuple[tuple[str, ...], tuple[str, ...]]]] = {
    "Python": (
        (("A Python script crashed the backend.",
          "Python rotates the backend logs nightly.",
          "The Python script strips noisy logs."),
         ("Backend script logs overflowed.",
          "Audit the backend script logs.",
          "Backend script logs look broken.")),
        (("The zoo python swallowed a rabbit.",
          "A python basked in the zoo reptile house.",
          "The reptile keeper fed the python a rabbit."),
         ("The zoo reptile swallowed a rabbit.",
          "A rabbit hopped past the zoo reptile.",
          "Zoo reptile keepers bought a rabbit.")),
    ),
    "Apple": (
        (("Apple unveiled a faster iPhone chip.",
          "Apple shares jumped after the iPhone launch.",
          "The Apple launch featured a new chip."),
         ("The iPhone launch chip dazzled.",
          "Analysts praised the iPhone launch chip.",
          "Is the iPhone launch chip fast?")),
        (("The apple harvest filled twelve crates.",
          "Grandma baked an apple tart from the grove crates.",
          "Ripe apple clusters hung in the grove before harvest."),
         ("The grove harvest fills crates.",
          "Bring crates for the grove harvest.",
          "Stack grove harvest crates tonight.")),
    ),
    "Java": (
        (("The Java compiler rejected the generic class.",
          "Java services ship each class inside a container.",
          "Our Java container requires a compiler upgrade."),
         ("The container compiler rejected the class.",
          "Which compiler builds that class in the container?",
          "The class breaks the container compiler.")),
        (("Fresh Java beans were roasted at the cafe.",
          "The cafe barista brews strong Java.",
          "A barista poured Java onto fresh ice."),
         ("The cafe barista roasts fresh beans.",
          "Our cafe barista makes fresh pastries.",
          "Fresh cafe barista specials tonight.")),
    ),
    "Bug": (
        (("The bug corrupted the checkout database.",
          "QA filed a bug against the checkout release.",
          "A regression bug slipped into the release database."),
         ("The checkout release corrupted the database.",
          "Checkout database errors after the release.",
          "Release blocked by a checkout database migration.")),
        (("A bug crept across the garden basil.",
          "The beetle bug chewed holes in the garden leaves.",
          "A green bug landed on the basil leaves."),
         ("Garden basil leaves have holes.",
          "Ants covered the garden basil leaves.",
          "Garden basil leaves look shredded.")),
    ),
    "Mercury": (
        (("A probe orbits Mercury near the sun.",
          "The probe photographed a crater on Mercury.",
          "A Mercury crater glows under the sun."),
         ("The probe imaged a crater near the sun.",
          "Sun glare blinded the crater probe.",
          "Steer the probe from the sun toward the crater.")),
        (("Mercury stays liquid inside a thermometer.",
          "The lab spilled mercury from a thermometer.",
          "Mercury vapor makes the liquid lab hazardous."),
         ("The lab thermometer leaked liquid.",
          "Liquid thermometer spills in the lab.",
          "A lab thermometer cracked and dripped liquid.")),
    ),
    "Jaguar": (
        (("A jaguar stalked deer along the river.",
          "The jaguar hunted deer in the dense jungle.",
          "Jaguar cubs swam across the jungle river."),
         ("Deer tracks line the jungle river.",
          "Rangers followed deer along the jungle river.",
          "The jungle river floods where deer drink.")),
        (("The Jaguar sedan left the dealership with new brakes.",
          "A vintage Jaguar coupe won the dealership show.",
          "The Jaguar coupe overtook the old sedan."),
         ("The dealership quoted a sedan coupe swap.",
          "Our sedan and coupe sit at the dealership.",
          "The dealership sold the coupe and the sedan.")),
    ),
    "Shell": (
        (("The shell script exports the path setting.",
          "Open a shell prompt and launch the script.",
          "The bash shell prompt prints the current path."),
         ("The script prints the wrong path at the prompt.",
          "Fix the script path before the prompt loads.",
          "The prompt hides the script path.")),
        (("A spiral shell washed onto the beach with the tide.",
          "The hermit crab settled into a bigger shell on the beach.",
          "Kids found a crab hiding in a shell at high tide."),
         ("The tide stranded a crab on the beach.",
          "A crab raced along the beach at tide.",
          "Low tide beach crab sightings.")),
    ),
    "Trunk": (
        (("The car trunk holds two suitcases.",
          "Pack the spare tire in the car trunk.",
          "The suitcases sit on the tire in the trunk."),
         ("The car fits suitcases and a tire.",
          "Pack suitcases and the tire into the car.",
          "Check the car tire and suitcases.")),
        (("The elephant sprayed water from its trunk at the handler.",
          "A trunk can grab peanuts from a handler.",
          "The young calf dipped its trunk in water for peanuts."),
         ("The handler brought peanuts and water.",
          "The handler traded peanuts for water tricks.",
          "The handler hid peanuts near the water.")),
    ),
}

DISAMBIGUATION_PROMPTS = (
    "Tell me what we noted about {term} recently.",
    "Summarize {term} for me lately.",
    "Any news about {term} this week?",
)


def gen_disambiguation(seed: int = 0) -> list[ProbeScenario]:
    """Eight ambiguous terms, two senses each, six context-carrying queries
    per term. Statements of both senses are interleaved in time."""
    rng = random.Random(f"disambiguation:{seed}")
    now = BASE_TS + 12 * 3600
    scenarios = []
    for ti, (term, senses) in enumerate(SENSES.items()):
        name = f"term-{term.lower()}"
        items = [(s, i, text) for s, (stmts, _) in enumerate(senses) for i, text in enumerate(stmts)]
        rng.shuffle(items)
        setup = []
        for slot, (s, i, text) in enumerate(items):
            ts = BASE_TS + slot * 3600 + ti * 120 + rng.uniform(0, 60)
            setup.append(ProbeRecord(text, f"{name}-sense{s}-{i}", ts))
        queries = []
        for s, (stmts, contexts) in enumerate(senses):
            other = senses[1 - s][0]
            for qi, prompt in enumerate(DISAMBIGUATION_PROMPTS):
                ctx = [c for j, c in enumerate(contexts) if j != qi]
                queries.append(ProbeQuery(
                    prompt=prompt.format(term=term),
                    expected=tuple(stmts),
                    forbidden=tuple(other),
                    context=tuple(ctx),
                    rubric=("accuracy", "context_fidelity"),
                    now=now, k=3, qid=f"{name}-s{s}-q{qi}",
                ))
        scenarios.append(ProbeScenario("disambiguation", name, setup, queries))
    return scenarios


def token_collisions(texts_a, texts_b, embedder: EmbeddingProvider | None = None) -> set[tuple[str, str]]:
    """Pairs of distinct content tokens, one from each side, that land in the
    same hash bucket."""
    embedder = embedder or HashingEmbedder()
    feature = getattr(embedder, "_feature", None)
    if feature is None:
        raise TypeError("collision check needs a feature-hashing embedder")
    buckets: dict[int, set[str]] = {}
    for text in texts_b:
        for tok in content_tokens(text):
            buckets.setdefault(feature(tok)[0], set()).add(tok)
    out = set()
    for text in texts_a:
        for tok in content_tokens(text):
            out.update((tok, other) for other in buckets.get(feature(tok)[0], ()) if other != tok)
    return out


GENERATORS = {
    "knowledge_update": gen_knowledge_updates,
    "temporal": gen_temporal,
    "associative": gen_associative,
    "disambiguation": gen_disambiguation,
}


def generate(study: str, seed: int = 0) -> list[ProbeScenario]:
    try:
        gen = GENERATORS[study]
    except KeyError:
        raise ValueError(f"unknown study {study!r}; choose from {', '.join(STUDIES)}") from None
    scenarios = gen(seed)
    for s in scenarios:
        s.validate()
    return scenarios
