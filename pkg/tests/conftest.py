import hypothesis

hypothesis.settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    derandomize=True,
    print_blob=False,
)
hypothesis.settings.load_profile("suite")
