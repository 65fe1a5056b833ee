"""Default fruit models.

Stiffness values are in ru/mm against the default 40 ru/mm gel. They are chosen so that
grape < strawberry < cucumber in hardness, each crosses a 20 ru mean-force threshold before
its contact patch fills the sensor pad, and the cucumber core more than triples the force
past 20 mm of squeeze.
"""
from .sim import Cylinder, FruitModel, Sphere

GRAPE = FruitModel(Sphere(8.0), shell_stiffness=6.0, name="grape")
STRAWBERRY = FruitModel(Sphere(12.0), shell_stiffness=9.0, name="strawberry")
CUCUMBER = FruitModel(Cylinder(25.0), shell_stiffness=16.0, name="cucumber",
                      core_onset=20.5, core_stiffness=600.0)
MANGO = FruitModel(Sphere(30.0), shell_stiffness=12.0, name="mango", ripeness_decay=0.3)
KIWI = FruitModel(Sphere(20.0), shell_stiffness=8.0, name="kiwi", ripeness_decay=0.3)

PRESETS = {m.name: m for m in (GRAPE, STRAWBERRY, CUCUMBER, MANGO, KIWI)}
