"""Pretrained ResNet backbones truncated to their pooled penultimate features."""

from __future__ import annotations

import torch
from torch import nn
from torchvision import models, transforms

# Feature width of the global-average-pooled penultimate layer.
FEATURE_DIMS = {"resnet18": 512, "resnet34": 512, "resnet50": 2048}

_BUILDERS = {
    "resnet18": (models.resnet18, "ResNet18_Weights"),
    "resnet34": (models.resnet34, "ResNet34_Weights"),
    "resnet50": (models.resnet50, "ResNet50_Weights"),
}

# Canonical evaluation preprocessing for the ImageNet-pretrained weights:
# resize the short side to 256, center-crop 224, normalize per channel.
# Small inputs (32x32 CIFAR images) are upsampled by the resize.
preprocess = transforms.Compose(
    [
        transforms.Resize(256, antialias=True),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
    ]
)


def get_backbone(name: str, pretrained: bool = True) -> nn.Module:
    """Build a ResNet with its classification head removed.

    The forward pass then returns the pooled penultimate features
    (512-dim for resnet18/34, 2048-dim for resnet50). `pretrained=False`
    keeps the randomly initialized weights, which is only useful for
    offline smoke tests.
    """
    if name not in _BUILDERS:
        raise ValueError(f"backbone must be one of {sorted(_BUILDERS)}, got {name!r}")
    builder, weights_enum = _BUILDERS[name]
    weights = getattr(models, weights_enum).IMAGENET1K_V1 if pretrained else None
    model = builder(weights=weights)
    model.fc = nn.Identity()
    model.eval()
    for param in model.parameters():
        param.requires_grad_(False)
    return model


@torch.no_grad()
def embed_batch(model: nn.Module, batch: torch.Tensor) -> torch.Tensor:
    """Run one preprocessed (B, 3, 224, 224) batch through the backbone."""
    return model(batch)
