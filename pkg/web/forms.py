from flask_wtf import FlaskForm
from wtforms import FloatField, IntegerField
from wtforms.validators import InputRequired, Optional, NumberRange, ValidationError
from config import Config
from logger import info_logger, error_logger
from dds_latency.model import ScenarioParams, SolverConfig


class ScenarioForm(FlaskForm):
    """
    Validates the scenario parameters of an /analyze request
    """
    class Meta:
        csrf = False

    m = FloatField('m', validators=[InputRequired(), NumberRange(min=0.0, max=1000.0, message='m must be between 0 and 1000')])
    r = FloatField('r', validators=[InputRequired(), NumberRange(min=0.1, max=1e6, message='r must be between 0.1 and 1e6 ms')])
    h = FloatField('h', validators=[InputRequired(), NumberRange(min=0.1, max=1e6, message='h must be between 0.1 and 1e6 ms')])
    p = FloatField('p', validators=[InputRequired(), NumberRange(min=0.0, max=1.0, message='p out of range')])
    epsilon = FloatField('epsilon', validators=[Optional(), NumberRange(min=1e-15, max=1e-3)])
    kmax = IntegerField('kmax', validators=[Optional(), NumberRange(min=1, max=4096)])

    def validate_m(self, m):
        """
        m = 0 passes the range check but leaves no message to send

        Params:
            m (FloatField): The field to be validated

        Returns:
            None
        """
        if m.data is not None and m.data <= 0:
            error_logger.error("Rejected m <= 0")
            raise ValidationError('m must be positive')

    def validate_p(self, p):
        if p.data is not None and p.data <= 0:
            error_logger.error("Rejected p <= 0")
            raise ValidationError('p out of range')

    def scenario(self):
        """
        The validated fields as a ScenarioParams
        """
        return ScenarioParams(m=self.m.data, r=self.r.data, h=self.h.data, p=self.p.data)

    def solver_config(self):
        overrides = {}
        if self.epsilon.data is not None:
            overrides['epsilon'] = self.epsilon.data
        if self.kmax.data is not None:
            overrides['kmax_floor'] = self.kmax.data
        return SolverConfig().with_overrides(overrides)


class SimulationForm(ScenarioForm):
    """
    Adds the run length and seed of a /simulate request
    """
    n = IntegerField('n', default=1000, validators=[Optional(), NumberRange(min=1, max=Config.MAX_WEB_MESSAGES,
                     message=f'n must be between 1 and {Config.MAX_WEB_MESSAGES}')])
    seed = IntegerField('seed', default=Config.DEFAULT_SEED, validators=[Optional(), NumberRange(min=0)])
    info_logger.info("Simulation form loaded")
