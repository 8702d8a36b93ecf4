"""Pipeline stages and the shared observation and error types."""
