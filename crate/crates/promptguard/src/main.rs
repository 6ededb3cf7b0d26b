fn main() -> anyhow::Result<()> {
    promptguard::cli::main_with_args(std::env::args_os())
}
