"""Network definition, training, quantization and hardware deployment."""
