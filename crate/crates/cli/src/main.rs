fn main() { matspec_core::probe(); }
