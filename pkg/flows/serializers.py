from rest_framework import serializers

from flows.flow import DtMode, Integrator, VelocityMode
from flows.reports import Termination


INITIAL_KINDS = ("line", "arc", "perturbed_line", "file")

# Single source of the run-configuration defaults; None means "derived at run time".
DEFAULTS = {
    "params": {
        "lambda": 0.0,
        "zeta": None,
    },
    "flow": {
        "integrator": Integrator.SEMI_IMPLICIT.value,
        "velocity_mode": VelocityMode.NORMAL.value,
        "dt_mode": DtMode.CFL.value,
        "dt": None,
        "safety": 0.1,
        "t_end": 0.0,
        "max_steps": 100_000,
        "stationarity_tol": None,
        "redistribute_every": None,
        "h_min_factor": 1e-3,
    },
    "initial": {
        "kind": "line",
        "bulge": 0.0,
        "amplitude": 0.0,
        "mode": 1,
        "extra_modes": 0,
        "seed": 0,
        "path": "",
    },
    "output": {
        "dir": "curveflow-output",
        "snapshot_every": 100,
        "snapshot_pairs": True,
        "svg": True,
        "svg_snapshots": 6,
    },
    "validation": {
        "validate_bc0": False,
        "bc0_tol": 1e-3,
    },
}

DERIVED_DEFAULTS = {
    "params.zeta": "zero vector in R^dim",
    "flow.dt": "required when dt_mode = \"fixed\"",
    "flow.stationarity_tol": "1e-6 * (1 + |W(f_0)|)",
    "flow.redistribute_every": "50 in normal mode, 0 in gradient mode",
}


class StrictKeysMixin:
    """Reject keys the serializer does not declare instead of dropping them."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {key: ["unknown key"] for key in unknown}
                )
        return super().to_internal_value(data)


def _float_list(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), **kwargs)


class ParamsSerializer(StrictKeysMixin, serializers.Serializer):
    zeta = _float_list(min_length=2, allow_null=True, default=DEFAULTS["params"]["zeta"])

    def get_fields(self):
        fields = super().get_fields()
        # ``lambda`` is a Python keyword.
        fields["lambda"] = serializers.FloatField(
            source="lam",
            min_value=0.0,
            default=DEFAULTS["params"]["lambda"],
            error_messages={"min_value": "lambda >= 0 required (length penalty weight)."},
        )
        return fields


class FlowSectionSerializer(StrictKeysMixin, serializers.Serializer):
    defaults = DEFAULTS["flow"]

    integrator = serializers.ChoiceField(
        choices=[item.value for item in Integrator], default=defaults["integrator"]
    )
    velocity_mode = serializers.ChoiceField(
        choices=[item.value for item in VelocityMode], default=defaults["velocity_mode"]
    )
    dt_mode = serializers.ChoiceField(
        choices=[item.value for item in DtMode], default=defaults["dt_mode"]
    )
    dt = serializers.FloatField(allow_null=True, default=defaults["dt"])
    safety = serializers.FloatField(default=defaults["safety"])
    t_end = serializers.FloatField(min_value=0.0, default=defaults["t_end"])
    max_steps = serializers.IntegerField(min_value=0, default=defaults["max_steps"])
    stationarity_tol = serializers.FloatField(
        allow_null=True, default=defaults["stationarity_tol"]
    )
    redistribute_every = serializers.IntegerField(
        min_value=0, allow_null=True, default=defaults["redistribute_every"]
    )
    h_min_factor = serializers.FloatField(min_value=0.0, default=defaults["h_min_factor"])

    def validate_safety(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError("safety must lie in (0, 1].")
        return value

    def validate_stationarity_tol(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("stationarity_tol > 0 required.")
        return value

    def validate(self, attrs):
        if attrs["t_end"] <= 0 and attrs["max_steps"] <= 0:
            raise serializers.ValidationError(
                {"t_end": "t_end > 0 or max_steps > 0 required."}
            )
        if attrs["dt_mode"] == DtMode.FIXED.value and not (attrs["dt"] or 0) > 0:
            raise serializers.ValidationError(
                {"dt": "dt > 0 required when dt_mode = \"fixed\"."}
            )
        return attrs


class InitialSectionSerializer(StrictKeysMixin, serializers.Serializer):
    defaults = DEFAULTS["initial"]

    kind = serializers.ChoiceField(choices=INITIAL_KINDS, default=defaults["kind"])
    bulge = serializers.FloatField(default=defaults["bulge"])
    amplitude = serializers.FloatField(
        min_value=0.0,
        default=defaults["amplitude"],
        error_messages={"min_value": "amplitude >= 0 required."},
    )
    mode = serializers.IntegerField(min_value=1, default=defaults["mode"])
    extra_modes = serializers.IntegerField(min_value=0, default=defaults["extra_modes"])
    seed = serializers.IntegerField(min_value=0, default=defaults["seed"])
    path = serializers.CharField(allow_blank=True, default=defaults["path"])

    def validate(self, attrs):
        if attrs["kind"] == "file" and not attrs["path"]:
            raise serializers.ValidationError({"path": "path required for kind = \"file\"."})
        return attrs


class OutputSectionSerializer(StrictKeysMixin, serializers.Serializer):
    defaults = DEFAULTS["output"]

    dir = serializers.CharField(default=defaults["dir"])
    snapshot_every = serializers.IntegerField(min_value=0, default=defaults["snapshot_every"])
    snapshot_pairs = serializers.BooleanField(default=defaults["snapshot_pairs"])
    svg = serializers.BooleanField(default=defaults["svg"])
    svg_snapshots = serializers.IntegerField(min_value=1, default=defaults["svg_snapshots"])


class ValidationSectionSerializer(StrictKeysMixin, serializers.Serializer):
    validate_bc0 = serializers.BooleanField(default=DEFAULTS["validation"]["validate_bc0"])
    bc0_tol = serializers.FloatField(min_value=0.0, default=DEFAULTS["validation"]["bc0_tol"])


class RunConfigSerializer(StrictKeysMixin, serializers.Serializer):
    dim = serializers.IntegerField(min_value=2)
    N = serializers.IntegerField(
        min_value=4,
        error_messages={"min_value": "N >= 4 required (stencil width of fourth-order operators)."},
    )
    f_minus = _float_list(min_length=2)
    f_plus = _float_list(min_length=2)
    params = ParamsSerializer()
    flow = FlowSectionSerializer()
    initial = InitialSectionSerializer()
    output = OutputSectionSerializer()
    validation = ValidationSectionSerializer()

    def validate(self, attrs):
        dim = attrs["dim"]
        errors = {}
        for key in ("f_minus", "f_plus"):
            if len(attrs[key]) != dim:
                errors[key] = f"expected {dim} coordinates, got {len(attrs[key])}."
        zeta = attrs["params"]["zeta"]
        if zeta is not None and len(zeta) != dim:
            errors["params"] = {"zeta": f"expected {dim} coordinates, got {len(zeta)}."}
        if errors:
            raise serializers.ValidationError(errors)
        if attrs["f_minus"] == attrs["f_plus"]:
            raise serializers.ValidationError(
                {"f_plus": "fixed endpoints f_- != f_+ required."}
            )
        return attrs


class EnergyBreakdownSerializer(serializers.Serializer):
    bending = serializers.FloatField()
    coupling = serializers.FloatField()
    length = serializers.FloatField()
    total = serializers.FloatField()


class FlowParamsSerializer(serializers.Serializer):
    zeta = _float_list(min_length=2)

    def get_fields(self):
        fields = super().get_fields()
        fields["lambda"] = serializers.FloatField(source="lam", min_value=0.0)
        return fields


class SnapshotSerializer(serializers.Serializer):
    t = serializers.FloatField()
    energy = EnergyBreakdownSerializer()
    v_l2 = serializers.FloatField()
    bc_residual = _float_list(min_length=2, max_length=2)
    length = serializers.FloatField()


class ViolationSerializer(serializers.Serializer):
    step = serializers.IntegerField(min_value=0)
    invariant = serializers.CharField()
    magnitude = serializers.FloatField()


class RunReportSerializer(serializers.Serializer):
    params = FlowParamsSerializer()
    W0 = serializers.FloatField(source="initial_energy.total", read_only=True)
    initial_energy = EnergyBreakdownSerializer()
    chord = serializers.FloatField(min_value=0.0)
    integrator = serializers.ChoiceField(choices=[item.value for item in Integrator])
    velocity_mode = serializers.ChoiceField(choices=[item.value for item in VelocityMode])
    stationarity_tol = serializers.FloatField()
    termination = serializers.ChoiceField(choices=[item.value for item in Termination])
    error = serializers.CharField(allow_null=True, required=False)
    steps = serializers.IntegerField(min_value=0)
    final_time = serializers.FloatField(min_value=0.0)
    final_energy = EnergyBreakdownSerializer(source="final_row.energy", read_only=True)
    redistributions = serializers.ListField(child=serializers.IntegerField(min_value=0))
    violations = ViolationSerializer(many=True)
    passed = serializers.BooleanField(read_only=True)
