"""Flask application factory for the IK4 decision service"""

import logging
from typing import Any

from flask import Flask, jsonify, request

from .clip import DEFAULT_REPAIR_BUDGET
from .enumeration import Countermodel, FrameFilter, countermodel_search
from .errors import IK4Error, InvariantViolation, UsageError
from .formula import parse, render
from .hilbert import check_proof, parse_proof
from .report import DecideResult, Evaluation, saturation_bundle, to_record
from .semantics import SemanticsVariant, extension, load_model

logger = logging.getLogger(__name__)


def create_app(config: Any) -> Flask:
    """
    Create and configure the Flask application.

    Args:
        config: Configuration object with search and saturation settings
    """
    app = Flask(__name__)

    app.config['APP_NAME'] = config.APP_NAME
    app.config['DEFAULT_BOUND'] = getattr(config, 'DEFAULT_BOUND', 3)
    app.config['MAX_BOUND'] = getattr(config, 'MAX_BOUND', 5)
    app.config['REPAIR_BUDGET'] = getattr(config, 'REPAIR_BUDGET', DEFAULT_REPAIR_BUDGET)
    app.config['SEARCH_WORKERS'] = getattr(config, 'SEARCH_WORKERS', 1)
    app.config['CHECK_EACH_STEP'] = getattr(config, 'CHECK_EACH_STEP', False)

    def body() -> dict:
        data = request.get_json(silent=True)
        if not isinstance(data, dict):
            raise UsageError("request body must be a JSON object")
        return data

    def field(data: dict, name: str) -> str:
        value = data.get(name)
        if not isinstance(value, str) or not value.strip():
            raise UsageError(f"'{name}' is required")
        return value

    def failure(e: Exception, route: str):
        if isinstance(e, IK4Error) and not isinstance(e, InvariantViolation):
            logger.info(f"{route} rejected: {e}")
            return jsonify({'error': str(e)}), 400
        logger.error(f"{route} failed: {e}", exc_info=True)
        return jsonify({'error': str(e)}), 500

    @app.route('/')
    def index():
        """Service info"""
        return jsonify({
            'name': app.config['APP_NAME'],
            'endpoints': ['/decide', '/saturate', '/eval', '/check-proof'],
            'default_bound': app.config['DEFAULT_BOUND'],
            'max_bound': app.config['MAX_BOUND'],
        })

    @app.route('/decide', methods=['POST'])
    def decide():
        """Bounded countermodel search, optionally saturating the countermodel"""
        try:
            data = body()
            formula = parse(field(data, 'formula'))
            bound = data.get('bound', app.config['DEFAULT_BOUND'])
            if isinstance(bound, bool) or not isinstance(bound, int) \
                    or not 1 <= bound <= app.config['MAX_BOUND']:
                raise UsageError(f"bound must be an integer between 1 and {app.config['MAX_BOUND']}")
            outcome = countermodel_search(formula, bound, FrameFilter.ik4(),
                                          workers=app.config['SEARCH_WORKERS'])
            result = DecideResult(outcome)
            if data.get('saturate') and isinstance(outcome, Countermodel):
                result = saturation_bundle(outcome, outcome.model, formula, outcome.world,
                                           app.config['REPAIR_BUDGET'], app.config['CHECK_EACH_STEP'])
            return jsonify(to_record(result))
        except Exception as e:
            return failure(e, '/decide')

    @app.route('/saturate', methods=['POST'])
    def saturate_route():
        """Saturate from a world of a posted model refuting the formula"""
        try:
            data = body()
            formula = parse(field(data, 'formula'))
            model = load_model(field(data, 'model'))
            truth = extension(model, formula)
            world = data.get('world')
            if world is None:
                refuting = [w for w in range(model.size) if not truth[w]]
                if not refuting:
                    raise UsageError("no world of the model refutes the formula")
                world = refuting[0]
            elif isinstance(world, bool) or not isinstance(world, int):
                raise UsageError("'world' must be an integer")
            model.frame.check_world(world)
            outcome = {'kind': 'saturate', 'formula': render(formula), 's0': world, 'worlds': model.size}
            result = saturation_bundle(outcome, model, formula, world,
                                       app.config['REPAIR_BUDGET'], app.config['CHECK_EACH_STEP'])
            return jsonify(to_record(result))
        except Exception as e:
            return failure(e, '/saturate')

    @app.route('/eval', methods=['POST'])
    def eval_route():
        """Worlds of a posted model forcing the formula"""
        try:
            data = body()
            formula = parse(field(data, 'formula'))
            model = load_model(field(data, 'model'))
            try:
                variant = SemanticsVariant(data.get('variant', 'BD'))
            except ValueError:
                raise UsageError(f"unknown semantics variant {data.get('variant')!r}") from None
            truth = extension(model, formula, variant)
            result = Evaluation(formula, model, variant, [w for w in range(model.size) if truth[w]])
            return jsonify(to_record(result))
        except Exception as e:
            return failure(e, '/eval')

    @app.route('/check-proof', methods=['POST'])
    def check_proof_route():
        """Check a derivation posted in the proof file format"""
        try:
            data = body()
            report = check_proof(parse_proof(field(data, 'proof')))
            return jsonify(to_record(report))
        except Exception as e:
            return failure(e, '/check-proof')

    return app
