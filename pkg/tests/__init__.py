# Slug Jouguet Solver Tests
