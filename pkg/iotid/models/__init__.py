# Classifiers, encoders and the model file container.
