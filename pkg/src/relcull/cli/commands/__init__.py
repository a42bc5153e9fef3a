"""
Subcommand groups; each module registers its parsers on the shared subparser action
"""
