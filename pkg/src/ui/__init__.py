"""
Command-line surface: subcommands and table emission.
"""
