"""Attack vocabulary: families, strength grids, attack sets, and what a
defense is allowed to know.

Run:  python3 demos/01_threat_model.py
"""

from multiatk import build_knowledge_set, full_attack_set, game_outcome
from multiatk.config import default_families
from multiatk.threat import GameSpec

families = default_families()
print("Registered families and grids:")
for fam in families:
    print(f"  {fam.id:12s} {fam.grid}")

attack_set = full_attack_set(families)
print(f"\nFull attack set: {len(attack_set)} instances "
      f"({len(families)} families x 10 strengths + the no-attack entry)")

# A defense that trained with l2 perturbations up to radius 0.5 knows the
# clean point and every l2 grid point below its training radius.
knowledge = build_knowledge_set({"l2": 0.5}, families)
print("\nKnowledge set of an l2@0.5-trained defense:")
for inst in knowledge:
    print(f"  {inst.label()}")

# The learner wins the game when its multi-attack error is within a factor
# gamma of the best achievable error.
spec = GameSpec(threshold=1.5, attack_set=attack_set, knowledge_set=knowledge)
outcome = game_outcome(spec, err_h=0.30, err_opt=0.25)
print(f"\nGame with gamma=1.5, err=0.30 vs best 0.25: "
      f"{'learner wins' if outcome.win else 'attacker wins'} "
      f"(ratio {outcome.ratios[0]:.2f})")
