"""Offline stand-in for the chat backend.

Responses are generated procedurally from a seed derived from the request
text, so repeated runs (and retries with identical prompts) are byte-stable.
Each stage's reply is schema-valid for that stage's parser, with mild noise
(prose around JSON, occasional duplicate topics, an occasional wrong or
free-form QA answer) so downstream cleaning paths stay exercised.
"""

from __future__ import annotations

import json
import random
import re

from . import synth
from .gateway import ChatRequest, classify_prompt
from .model import ChartType, canonical_json
from .util import extract_last_json_object, fmt_answer, stable_hash64

CHART_TYPE_LINE_RE = re.compile(r"^Chart type:\s*(\S+)", re.MULTILINE)
TOPIC_LINE_RE = re.compile(r"^Topic:\s*(.+)$", re.MULTILINE)
COUNT_RE = re.compile(r"exactly (\d+)")


def mock_response(req: ChatRequest, mock_seed: int) -> str:
    """Fabricate a stage-appropriate completion for ``req``."""
    rng = random.Random(stable_hash64(mock_seed, req.user))
    stage = classify_prompt(req)
    if stage == "topic":
        return _topic_reply(req, rng)
    if stage == "qa":
        return _qa_reply(req, rng)
    return _data_reply(req, rng)


def _requested_chart_type(req: ChatRequest, rng: random.Random) -> ChartType:
    match = CHART_TYPE_LINE_RE.search(req.user)
    if match:
        try:
            return ChartType(match.group(1))
        except ValueError:
            pass
    return rng.choice(list(ChartType))


def _topic_reply(req: ChatRequest, rng: random.Random) -> str:
    match = COUNT_RE.search(req.user)
    count = int(match.group(1)) if match else 20
    topics = [synth.random_topic(rng) for _ in range(count)]
    # Real models repeat themselves now and then; keep dedup honest downstream.
    if count >= 4 and rng.random() < 0.2:
        victim = rng.randrange(1, count)
        topics[victim] = topics[0].upper() if rng.random() < 0.5 else topics[0]
    return "\n".join(f"{i + 1}. {t}" for i, t in enumerate(topics))


def _data_reply(req: ChatRequest, rng: random.Random) -> str:
    chart_type = _requested_chart_type(req, rng)
    topic_match = TOPIC_LINE_RE.search(req.user)
    topic = topic_match.group(1).strip() if topic_match else None
    data = synth.random_chart_data(chart_type, rng, topic=topic)
    body = canonical_json(data)
    style = rng.randrange(3)
    if style == 0:
        return body
    if style == 1:
        return f"Here is the chart data:\n```json\n{body}\n```"
    return f"```json\n{body}\n```\nLet me know if you need adjustments."


def _qa_reply(req: ChatRequest, rng: random.Random) -> str:
    from . import qa  # deferred: qa builds prompts via gateway types
    from .evaluation import parse_number
    from .model import chart_data_from_dict

    chart_type = _requested_chart_type(req, rng)
    target = extract_last_json_object(req.user)
    if target is None:
        return "[]"
    try:
        data = chart_data_from_dict(target, chart_type, topic="")
    except Exception:
        return "[]"

    pairs = qa.instantiate_templates(data, rng, k=rng.randint(3, 5))
    items = [{"question": p.question, "answer": p.answer} for p in pairs]
    if rng.random() < 0.15:
        items.append(
            {
                "question": "What overall trend does the figure suggest?",
                "answer": "The values vary across the chart.",
            }
        )
    if items and rng.random() < 0.1:
        victim = rng.choice(items)
        value = parse_number(victim["answer"])
        if value is not None:
            victim["answer"] = fmt_answer(value * 1.25 + 1.0)
    return json.dumps(items, indent=2)
