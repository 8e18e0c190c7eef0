# app/harness/serializers.py

from collections.abc import Mapping

from rest_framework import serializers

from app.core.constants import Domain, Method, SelectionMode, SignalMode
from app.policies.learners import LEARNER_NAMES


# =======================================================
# NESTED SECTIONS
# =======================================================
class StrictSerializer(serializers.Serializer):
    """Rejects keys that are not declared fields instead of dropping them."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unrecognised key."] for key in unknown})
        return super().to_internal_value(data)


class SignalSerializer(StrictSerializer):
    mode = serializers.ChoiceField(choices=[m.value for m in SignalMode])
    batch_size = serializers.IntegerField(min_value=1)


class ReuseSerializer(StrictSerializer):
    selection = serializers.ChoiceField(choices=[m.value for m in SelectionMode])
    gamma = serializers.FloatField(min_value=0.0, max_value=1.0)


class KernelSerializer(StrictSerializer):
    delta = serializers.FloatField()
    l = serializers.FloatField()

    def validate(self, attrs):
        for name in ("delta", "l"):
            if attrs[name] <= 0:
                raise serializers.ValidationError({name: "Must be positive."})
        return attrs


class GpSerializer(StrictSerializer):
    noise = serializers.FloatField(min_value=0.0)
    jitter = serializers.FloatField(min_value=0.0)
    max_jitter = serializers.FloatField(min_value=0.0)
    cap = serializers.IntegerField(min_value=1)
    normalize_y = serializers.BooleanField()

    def validate(self, attrs):
        if attrs["max_jitter"] < attrs["jitter"]:
            raise serializers.ValidationError({"max_jitter": "Must be at least jitter."})
        return attrs


class LikelihoodSerializer(StrictSerializer):
    eps2_gp = serializers.FloatField()
    eps2_nn = serializers.FloatField()

    def validate(self, attrs):
        for name in ("eps2_gp", "eps2_nn"):
            if attrs[name] <= 0:
                raise serializers.ValidationError({name: "Must be positive."})
        return attrs


class MlpSerializer(StrictSerializer):
    hidden = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=True)
    activation = serializers.ChoiceField(choices=["tanh", "relu"])
    learning_rate = serializers.FloatField(min_value=0.0)
    momentum = serializers.FloatField(min_value=0.0, max_value=1.0)
    epochs = serializers.IntegerField(min_value=1)
    batch_size = serializers.IntegerField(min_value=1)


class NoveltySerializer(StrictSerializer):
    k = serializers.IntegerField(min_value=1)
    threshold = serializers.FloatField()


class CemSerializer(StrictSerializer):
    population = serializers.IntegerField(min_value=1)
    elite_fraction = serializers.FloatField(min_value=0.0, max_value=1.0)
    iterations = serializers.IntegerField(min_value=1)
    init_std = serializers.FloatField(min_value=0.0)
    min_std = serializers.FloatField(min_value=0.0)
    extra_noise = serializers.FloatField(min_value=0.0)

    def validate_elite_fraction(self, value):
        if value <= 0:
            raise serializers.ValidationError("Must be greater than 0.")
        return value


class LearningSerializer(StrictSerializer):
    samples = serializers.IntegerField(min_value=1)
    learner = serializers.ChoiceField(choices=list(LEARNER_NAMES))


class ReturnTableSerializer(StrictSerializer):
    episodes = serializers.IntegerField(min_value=1)
    variance = serializers.FloatField(required=False, allow_null=True)

    def validate_variance(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value


class PrDrlSerializer(StrictSerializer):
    nu = serializers.FloatField(min_value=0.0)
    delta_nu = serializers.FloatField(min_value=0.0)


class Nav2dTaskSerializer(StrictSerializer):
    control_cost = serializers.FloatField(min_value=0.0)
    goal_radius = serializers.FloatField()
    max_steps = serializers.IntegerField(min_value=1)
    controller_gain = serializers.FloatField(required=False, default=1.0)

    def validate_goal_radius(self, value):
        if value <= 0:
            raise serializers.ValidationError("Must be positive.")
        return value


class CartPoleTaskSerializer(StrictSerializer):
    gravity = serializers.FloatField()
    masscart = serializers.FloatField()
    masspole = serializers.FloatField()
    length = serializers.FloatField()
    force_mag = serializers.FloatField()
    tau = serializers.FloatField()
    reward_angle_deg = serializers.FloatField()
    theta_threshold_deg = serializers.FloatField()
    x_threshold = serializers.FloatField()
    max_steps = serializers.IntegerField(min_value=1)
    reset_noise = serializers.FloatField(min_value=0.0)
    controller_gains = serializers.ListField(child=serializers.FloatField(), min_length=4, max_length=4)
    controller_bias_per_newton = serializers.FloatField()

    def validate(self, attrs):
        for name in ("gravity", "masscart", "masspole", "length", "tau"):
            if attrs[name] <= 0:
                raise serializers.ValidationError({name: "Must be positive."})
        return attrs


def point_field(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, **kwargs)


# =======================================================
# EXPERIMENT FILE
# =======================================================
class ExperimentConfigSerializer(serializers.Serializer):
    """
    Fully merged experiment file (defaults already applied). Custom goal or
    force lists replace the built-in suites.
    """

    name = serializers.CharField(max_length=200)
    domain = serializers.ChoiceField(choices=[d.value for d in Domain])
    methods = serializers.ListField(
        child=serializers.ChoiceField(choices=[m.value for m in Method]),
        allow_empty=False,
    )
    target_suite = serializers.ChoiceField(choices=["near", "novel"])
    source_goals = serializers.ListField(child=point_field(), required=False, allow_empty=False)
    target_goals = serializers.ListField(child=point_field(), required=False, allow_empty=False)
    source_forces = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    target_forces = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    model_kinds = serializers.ListField(child=serializers.ChoiceField(choices=["gp", "mlp"]), required=False)

    episodes = serializers.IntegerField(min_value=1)
    trials = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    samples = serializers.IntegerField(min_value=1)
    ablation_sizes = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=False)

    signal = SignalSerializer()
    reuse = ReuseSerializer()
    kernel = KernelSerializer()
    gp = GpSerializer()
    likelihood = LikelihoodSerializer()
    mlp = MlpSerializer()
    novelty = NoveltySerializer()
    cem = CemSerializer()
    learning = LearningSerializer()
    return_table = ReturnTableSerializer()
    pr_drl = PrDrlSerializer()
    task = serializers.DictField()

    def validate_methods(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError("Methods must not repeat.")
        return value

    def validate(self, attrs):
        known = set(self.fields)
        unknown = sorted(set(self.initial_data) - known)
        if unknown:
            raise serializers.ValidationError({"unknown_keys": f"Unrecognised keys: {', '.join(unknown)}"})

        task_serializer = Nav2dTaskSerializer if attrs["domain"] == Domain.NAV2D.value else CartPoleTaskSerializer
        task = task_serializer(data=attrs["task"])
        if not task.is_valid():
            raise serializers.ValidationError({"task": task.errors})
        attrs["task"] = dict(task.validated_data)

        if attrs["domain"] == Domain.NAV2D.value and (attrs.get("source_forces") or attrs.get("target_forces")):
            raise serializers.ValidationError({"domain": "Force lists apply to cartpole only."})
        if attrs["domain"] == Domain.CARTPOLE.value and (attrs.get("source_goals") or attrs.get("target_goals")):
            raise serializers.ValidationError({"domain": "Goal lists apply to nav2d only."})
        return attrs
