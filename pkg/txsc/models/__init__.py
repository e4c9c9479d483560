"""Contract tree, value, execution, scenario and history types."""
