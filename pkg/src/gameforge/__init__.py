"""gameforge: an always-on designer of small grid games.

The package is organised around one shared artifact, the JSON game
definition (`gdl`), which every other part reads or writes:

- `engine`     deterministic turn-based simulation of one level
- `agents`     random / tree-search / exhaustive playtesters and coverage
- `leveldesign` evolutionary level generation scored by playtests
- `rulesetdesign` rule-pattern catalogue and ruleset viability checks
- `mechanics`  synthesis of new rule blocks, judged by reachability change
- `studio`     the continuous loop tying the activities to a persistent
               workspace and an append-only event feed
"""

__version__ = "0.1.0"
