class GazetteerMismatchWarning(UserWarning):
    pass
