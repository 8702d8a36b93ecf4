"""ArticTwin: articulated-object joint estimation from RGB-D interaction videos."""
