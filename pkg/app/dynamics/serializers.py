# app/dynamics/serializers.py

from rest_framework import serializers

from app.core.constants import SignalMode
from app.dynamics.mlp import ACTIVATIONS


def matrix_field(**kwargs):
    return serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), allow_empty=False),
        allow_empty=False,
        **kwargs,
    )


def vector_field(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), allow_empty=False, **kwargs)


# =======================================================
# SHARED HEADER
# =======================================================
class LayoutSerializer(serializers.Serializer):
    mode = serializers.ChoiceField(choices=[m.value for m in SignalMode])
    input_dim = serializers.IntegerField(min_value=1)
    output_dim = serializers.IntegerField(min_value=1)
    state_dim = serializers.IntegerField(min_value=1)

    def validate(self, attrs):
        if attrs["state_dim"] >= attrs["input_dim"]:
            raise serializers.ValidationError("input_dim must exceed state_dim (x = (s, a))")
        return attrs


class ModelHeaderSerializer(serializers.Serializer):
    version = serializers.IntegerField()
    kind = serializers.CharField()
    layout = LayoutSerializer()


# =======================================================
# GP FILE
# =======================================================
class GpModelFileSerializer(ModelHeaderSerializer):
    delta = serializers.FloatField()
    l = serializers.FloatField()  # noqa: E741
    noise = serializers.FloatField(min_value=0.0)
    jitter = serializers.FloatField(min_value=0.0)
    normalize_y = serializers.BooleanField(required=False, default=False)
    X = matrix_field()
    Y = matrix_field()

    def validate(self, attrs):
        if attrs["delta"] <= 0 or attrs["l"] <= 0:
            raise serializers.ValidationError("kernel parameters delta and l must be positive")
        X, Y = attrs["X"], attrs["Y"]
        if len(X) != len(Y):
            raise serializers.ValidationError(f"X has {len(X)} rows but Y has {len(Y)}")
        layout = attrs["layout"]
        if any(len(row) != layout["input_dim"] for row in X):
            raise serializers.ValidationError("every X row must have input_dim entries")
        if any(len(row) != layout["output_dim"] for row in Y):
            raise serializers.ValidationError("every Y row must have output_dim entries")
        return attrs


# =======================================================
# MLP FILE
# =======================================================
class MlpModelFileSerializer(ModelHeaderSerializer):
    layers = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2)
    activation = serializers.ChoiceField(choices=sorted(ACTIVATIONS))
    weights = matrix_field()
    biases = matrix_field()
    x_mean = vector_field()
    x_std = vector_field()
    y_mean = vector_field()
    y_std = vector_field()
    eps2_nn = serializers.FloatField(required=False)
    epochs = serializers.IntegerField(min_value=0, required=False, default=0)
    learning_rate = serializers.FloatField(required=False, default=0.0)
    final_loss = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        layers = attrs["layers"]
        if len(attrs["weights"]) != len(layers) - 1 or len(attrs["biases"]) != len(layers) - 1:
            raise serializers.ValidationError("one weight block and one bias per layer transition")
        for i, (w, b) in enumerate(zip(attrs["weights"], attrs["biases"])):
            if len(w) != layers[i] * layers[i + 1] or len(b) != layers[i + 1]:
                raise serializers.ValidationError(f"layer {i} parameters do not match layer sizes")
        if len(attrs["x_mean"]) != layers[0] or len(attrs["x_std"]) != layers[0]:
            raise serializers.ValidationError("input statistics do not match the input layer")
        if len(attrs["y_mean"]) != layers[-1] or len(attrs["y_std"]) != layers[-1]:
            raise serializers.ValidationError("output statistics do not match the output layer")
        layout = attrs["layout"]
        if layers[0] != layout["input_dim"] or layers[-1] != layout["output_dim"]:
            raise serializers.ValidationError("layer sizes do not match the layout")
        return attrs
