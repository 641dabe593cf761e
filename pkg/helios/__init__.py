# helios - Source-free domain-adaptive solar-power classification
# MIT License

__version__ = "0.1.0"
