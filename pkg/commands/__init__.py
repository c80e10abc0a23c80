"""
Subcommands of the selection toolkit CLI, one module per command.
"""
